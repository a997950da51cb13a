"""Gaussian model exp(-sigma^2 u^2 / 2) fitted to a defocus filter.

u is in cycles per pixel, so sigma comes out in pixels. The model area is
taken with the same trapezoid rule on the same grid as the curve area, which
makes a sampled Gaussian fit itself exactly.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import bisect, curve_fit

from .errors import FitError
from .models import FrequencyAxis, GaussianFitResult, OtfCurve

logger = logging.getLogger(__name__)

SIGMA_BRACKET = (1e-6, 1e3)
SIGMA_XTOL = 1e-12
AREA_SLACK = 1e-12


def gaussian(u, sigma: float):
    return np.exp(-0.5 * (sigma * np.asarray(u, dtype=float)) ** 2)


def gaussian_curve(sigma: float, frequencies: np.ndarray) -> OtfCurve:
    return OtfCurve(
        axis=FrequencyAxis.CYCLES_PER_PIXEL,
        frequencies=frequencies,
        values=gaussian(frequencies, sigma),
    )


def _check_span(curve: OtfCurve) -> None:
    u = curve.frequencies
    if curve.axis is not FrequencyAxis.CYCLES_PER_PIXEL:
        raise FitError("Gaussian fitting needs a cycles-per-pixel curve")
    if u.size < 2 or abs(u[0]) > 1e-12 or abs(u[-1] - 1.0) > 1e-12:
        raise FitError("curve must span u in [0, 1]")


def curve_area(curve: OtfCurve) -> float:
    """Trapezoid area under the curve over u in [0, 1]."""
    _check_span(curve)
    return float(trapezoid(curve.values, curve.frequencies))


def _model_area(sigma: float, u: np.ndarray) -> float:
    return float(trapezoid(gaussian(u, sigma), u))


def mae(curve: OtfCurve, sigma: float) -> float:
    """Mean absolute deviation from the Gaussian over the curve's own samples."""
    return float(np.mean(np.abs(curve.values - gaussian(curve.frequencies, sigma))))


def rmse(curve: OtfCurve, sigma: float) -> float:
    """Root-mean-square deviation from the Gaussian over the curve's own samples."""
    return float(np.sqrt(np.mean((curve.values - gaussian(curve.frequencies, sigma)) ** 2)))


def _result(curve: OtfCurve, sigma: float, area: float) -> GaussianFitResult:
    return GaussianFitResult(
        sigma=sigma,
        mae=mae(curve, sigma),
        rmse=rmse(curve, sigma),
        matched_area=area,
    )


def fit_sigma_equal_area(curve: OtfCurve) -> GaussianFitResult:
    """Sigma whose Gaussian has the same area over [0, 1] as the curve."""
    area = curve_area(curve)
    if area <= 0:
        raise FitError(f"curve area {area:.6g} is not positive")
    if area > 1.0 + AREA_SLACK:
        raise FitError(f"curve area {area:.6g} exceeds 1; no sigma >= 0 matches it")

    u = curve.frequencies
    lo, hi = SIGMA_BRACKET
    if area >= _model_area(lo, u):
        return _result(curve, 0.0, area)
    if area <= _model_area(hi, u):
        raise FitError(f"curve area {area:.6g} is below the narrowest Gaussian on this grid")

    sigma = bisect(lambda s: _model_area(s, u) - area, lo, hi, xtol=SIGMA_XTOL)
    return _result(curve, float(sigma), area)


def fit_sigma_least_squares(curve: OtfCurve) -> GaussianFitResult:
    """Least-squares sigma, seeded with the equal-area value."""
    seed = fit_sigma_equal_area(curve)
    popt, _ = curve_fit(gaussian, curve.frequencies, curve.values, p0=[max(seed.sigma, 1e-3)])
    sigma = abs(float(popt[0]))
    logger.debug("[Fit] least-squares sigma %.6g vs equal-area %.6g", sigma, seed.sigma)
    return _result(curve, sigma, seed.matched_area)


def linear_fit_r2(x, y) -> Tuple[float, float, float]:
    """Least-squares line through (x, y) and its coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if total == 0 else 1.0 - float(np.sum(residual**2) / total)
    return float(slope), float(intercept), r2
