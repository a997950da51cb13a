"""Polychromatic defocus OTF under black-body illumination.

Curves are sampled on the cycles-per-pixel axis u = rho * P over [0, 1].
"""
import logging
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .errors import OpticsError, QuadratureError
from .geometry import derive_optics
from .models import (
    CameraConfig,
    DefocusState,
    FrequencyAxis,
    OtfCurve,
    QuadratureSpec,
    SpectralModel,
)
from .mono_otf import defocus_transfer

logger = logging.getLogger(__name__)

# Rounded constants, SI units
PLANCK = 6.63e-34
LIGHT_SPEED = 3e8
BOLTZMANN = 1.38e-23
WIEN = 2.898e-3

# exp() argument above which the radiance is reported as 0
_EXPONENT_CUTOFF = 700.0

DEFAULT_FREQ_SAMPLES = 257
MIN_FREQ_SAMPLES = 32


def planck_radiance(wavelength, temperature: float):
    """Black-body spectral energy density (8 pi h c / lambda^5) / (exp(hc / lambda k T) - 1)."""
    lam = np.asarray(wavelength, dtype=float)
    if np.any(lam <= 0) or temperature <= 0:
        raise OpticsError("wavelength and temperature must be positive")
    exponent = PLANCK * LIGHT_SPEED / (lam * BOLTZMANN * temperature)
    safe = np.minimum(exponent, _EXPONENT_CUTOFF)
    phi = 8.0 * np.pi * PLANCK * LIGHT_SPEED / lam**5 / np.expm1(safe)
    phi = np.where(exponent > _EXPONENT_CUTOFF, 0.0, phi)
    return float(phi) if phi.ndim == 0 else phi


def peak_wavelength(
    temperature: float,
    lambda_min: float = 50e-9,
    lambda_max: float = 20e-6,
) -> float:
    """Wavelength of maximum radiance, found numerically on a bounded interval."""
    result = minimize_scalar(
        lambda lam_um: -planck_radiance(lam_um * 1e-6, temperature),
        bounds=(lambda_min * 1e6, lambda_max * 1e6),
        method="bounded",
        options={"xatol": 1e-9},
    )
    return float(result.x) * 1e-6


def _frequency_axis(freq_samples: int) -> np.ndarray:
    if freq_samples < MIN_FREQ_SAMPLES:
        raise OpticsError(f"freq_samples must be at least {MIN_FREQ_SAMPLES}, got {freq_samples}")
    return np.linspace(0.0, 1.0, freq_samples)


def _transfer_grid(config, state, u, wavelengths, quad):
    """Exact monochrome transfer on the (u, lambda) grid; rows are frequencies."""
    optics = derive_optics(config)
    scale = optics.image_distance / (optics.aperture_diameter * config.pixel_pitch)
    s = u[:, None] * wavelengths[None, :] * scale
    a_r = abs(state.wavefront_coefficient)
    a = np.broadcast_to(a_r / wavelengths[None, :], s.shape)
    try:
        return defocus_transfer(s, a, quad, mode="exact").value
    except QuadratureError as e:
        if e.s is None or e.ar_over_lambda in (None, 0.0):
            raise
        lam = a_r / e.ar_over_lambda
        raise e.at_sample(e.s / (lam * scale), lam) from e


def polychromatic_otf(
    config: CameraConfig,
    state: DefocusState,
    spectral: Optional[SpectralModel] = None,
    freq_samples: int = DEFAULT_FREQ_SAMPLES,
    quad: Optional[QuadratureSpec] = None,
) -> OtfCurve:
    """Radiance-weighted average of the monochrome transfer over the spectral band.

    Wavelengths past their cutoff contribute 0 but stay in the normalization.
    """
    spectral = spectral or SpectralModel()
    u = _frequency_axis(freq_samples)
    wavelengths = spectral.wavelengths
    phi = planck_radiance(wavelengths, spectral.temperature)
    transfer = _transfer_grid(config, state, u, wavelengths, quad)
    values = trapezoid(transfer * phi[None, :], wavelengths, axis=1) / trapezoid(phi, wavelengths)
    logger.debug(
        "[Spectral] curve for C=%.4g m, A_R=%.4g m on %d x %d grid",
        state.coc_diameter, state.wavefront_coefficient, u.size, wavelengths.size,
    )
    return OtfCurve(
        axis=FrequencyAxis.CYCLES_PER_PIXEL,
        frequencies=u,
        values=values,
        config=config,
        state=state,
    )


def monochrome_curve(
    config: CameraConfig,
    state: DefocusState,
    wavelength: float,
    freq_samples: int = DEFAULT_FREQ_SAMPLES,
    quad: Optional[QuadratureSpec] = None,
) -> OtfCurve:
    """Single-wavelength transfer on the cycles-per-pixel axis."""
    if wavelength <= 0:
        raise OpticsError("wavelength must be positive")
    u = _frequency_axis(freq_samples)
    transfer = _transfer_grid(config, state, u, np.array([wavelength]), quad)
    return OtfCurve(
        axis=FrequencyAxis.CYCLES_PER_PIXEL,
        frequencies=u,
        values=transfer[:, 0],
        config=config,
        state=state,
    )


def mtf(curve: OtfCurve) -> OtfCurve:
    """Pointwise magnitude of a transfer curve."""
    return curve.with_values(np.abs(curve.values))
