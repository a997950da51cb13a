import numpy as np
import pytest

from backend.optics.errors import OpticsError, QuadratureError
from backend.optics.geometry import state_from_coc, state_from_wavefront
from backend.optics.models import DefocusState, FrequencyAxis, SpectralModel
from backend.optics.spectral_otf import (
    WIEN,
    monochrome_curve,
    mtf,
    peak_wavelength,
    planck_radiance,
    polychromatic_otf,
)


def test_planck_radiance_value():
    assert planck_radiance(500e-9, 6000.0) == pytest.approx(1.3326e6, rel=1e-2)


def test_planck_radiance_is_positive_and_underflows_to_zero():
    lam = np.linspace(200e-9, 2e-6, 64)
    assert np.all(planck_radiance(lam, 6000.0) > 0)
    assert planck_radiance(1e-9, 300.0) == 0.0
    with pytest.raises(OpticsError):
        planck_radiance(-1e-9, 6000.0)


def test_peak_wavelength_follows_wien():
    peak = peak_wavelength(6000.0)
    assert peak == pytest.approx(483.8e-9, rel=1e-3)
    assert peak == pytest.approx(WIEN / 6000.0, rel=5e-3)


def test_polychromatic_otf_dc_and_bounds(reference_camera, coarse_spectral):
    state = state_from_coc(reference_camera, 3.0 * reference_camera.pixel_pitch)
    curve = polychromatic_otf(reference_camera, state, coarse_spectral, freq_samples=65)
    assert curve.axis is FrequencyAxis.CYCLES_PER_PIXEL
    assert curve.frequencies[0] == 0.0 and curve.frequencies[-1] == 1.0
    assert curve.values[0] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.abs(curve.values) <= 1.0 + 1e-6)


def test_in_focus_curve_is_all_pass(reference_camera, coarse_spectral):
    curve = polychromatic_otf(reference_camera, DefocusState.in_focus(), coarse_spectral, freq_samples=33)
    assert np.allclose(curve.values, 1.0, atol=1e-12)


def test_narrow_band_matches_single_wavelength(reference_camera):
    wavelength = 550e-9
    band = SpectralModel(lambda_min=wavelength, lambda_max=wavelength * (1 + 1e-9), lambda_samples=16)
    state = state_from_coc(reference_camera, 2.0 * reference_camera.pixel_pitch)
    poly = polychromatic_otf(reference_camera, state, band, freq_samples=33)
    mono = monochrome_curve(reference_camera, state, wavelength, freq_samples=33)
    assert np.max(np.abs(poly.values - mono.values)) < 1e-6


def test_mtf_is_magnitude_and_idempotent(reference_camera, coarse_spectral):
    state = state_from_coc(reference_camera, 6.0 * reference_camera.pixel_pitch)
    curve = polychromatic_otf(reference_camera, state, coarse_spectral, freq_samples=65)
    once = mtf(curve)
    assert np.all(once.values >= 0)
    assert np.array_equal(once.values, np.abs(curve.values))
    assert np.array_equal(mtf(once).values, once.values)


def test_mild_defocus_gives_bell_shaped_filter(reference_camera, coarse_spectral):
    state = state_from_wavefront(reference_camera, 0.1 * reference_camera.pixel_pitch)
    curve = polychromatic_otf(reference_camera, state, coarse_spectral, freq_samples=65)
    assert np.all(np.diff(curve.values) <= 1e-9)
    assert curve.values[-1] < curve.values[0]


def test_quadrature_failure_names_spectral_sample(reference_camera, coarse_spectral, starved_quad):
    state = state_from_coc(reference_camera, 3.0 * reference_camera.pixel_pitch)
    with pytest.raises(QuadratureError) as info:
        polychromatic_otf(reference_camera, state, coarse_spectral, freq_samples=33, quad=starved_quad)
    assert info.value.u is not None
    assert 0.0 <= info.value.u <= 1.0
    band = (coarse_spectral.lambda_min * (1 - 1e-9), coarse_spectral.lambda_max * (1 + 1e-9))
    assert band[0] <= info.value.wavelength <= band[1]


def test_frequency_grid_too_coarse(reference_camera):
    with pytest.raises(OpticsError):
        polychromatic_otf(reference_camera, DefocusState.in_focus(), freq_samples=16)
    with pytest.raises(OpticsError):
        monochrome_curve(reference_camera, DefocusState.in_focus(), 0.0)


def test_curve_is_trapezoid_average_over_band(reference_camera):
    band = SpectralModel(lambda_samples=16)
    state = state_from_coc(reference_camera, 2.0 * reference_camera.pixel_pitch)
    poly = polychromatic_otf(reference_camera, state, band, freq_samples=33)
    lam = band.wavelengths
    mono = np.column_stack(
        [monochrome_curve(reference_camera, state, w, freq_samples=33).values for w in lam]
    )
    # end nodes carry half a step of weight
    step = np.diff(lam)
    weights = np.zeros_like(lam)
    weights[:-1] += step / 2
    weights[1:] += step / 2
    phi = planck_radiance(lam, band.temperature) * weights
    assert poly.values == pytest.approx(mono @ phi / phi.sum(), abs=1e-12)


@pytest.mark.slow
def test_spectral_grid_converges(reference_camera):
    state = state_from_coc(reference_camera, 3.0 * reference_camera.pixel_pitch)
    coarse = polychromatic_otf(reference_camera, state, SpectralModel(lambda_samples=256), freq_samples=65)
    fine = polychromatic_otf(reference_camera, state, SpectralModel(lambda_samples=512), freq_samples=65)
    assert np.max(np.abs(fine.values - coarse.values)) < 1e-4
