"""Single-wavelength OTF of a defocused circular pupil.

Frequencies are normalized to the incoherent cutoff: s = rho / (2 rho_o), and
theta = arccos(s). Defocus severity is A_R / lambda (only its magnitude
matters). All functions accept scalars or arrays and broadcast.
"""
import logging
import math
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.optimize import bisect

from .errors import FrequencyError, OpticsError
from .models import FringeAnalysis, QuadratureSpec
from .quadrature import adaptive_gauss_legendre, gauss_legendre_unit

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE = QuadratureSpec()
ROOT_GRID_POINTS = 2048
ROOT_TOLERANCE = 1e-7

# Straight-line fit of the fringe period against severity, valid above 2
FRINGE_SLOPE = 2.38
FRINGE_OFFSET = 2.88


class TransferSample(NamedTuple):
    value: np.ndarray
    limit: np.ndarray


def _scalar_or_array(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def _frequency(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise FrequencyError("normalized frequency must be non-negative")
    return s


def _severity(ar_over_lambda) -> np.ndarray:
    return np.abs(np.asarray(ar_over_lambda, dtype=float))


def diffraction_otf(s):
    """Aberration-free OTF (2/pi)(theta - sin(2 theta)/2); zero beyond cutoff."""
    s = _frequency(s)
    theta = np.arccos(np.minimum(s, 1.0))
    h = (2.0 / np.pi) * (theta - 0.5 * np.sin(2.0 * theta))
    return _scalar_or_array(np.where(s >= 1.0, 0.0, h))


def _circle_integrand(v, c, a):
    # x = (1 - c)(1 - v^2) regularizes the square-root endpoint at x = 1 - c;
    # the factor (1 - c)^1.5 is applied outside the rule.
    span = 1.0 - c
    return 2.0 * v * v * np.sqrt(2.0 - span * v * v) * np.cos(
        8.0 * np.pi * a * c * span * (1.0 - v * v)
    )


def _chord_integrand(v, c, a, k):
    span = 1.0 - c
    return np.sqrt(1.0 - c * c) * (1.0 - v**k) * np.cos(8.0 * np.pi * a * c * span * v)


def _segment_batch(s, a, quad, integrand, extra=(), scale=None):
    """Evaluate (4/pi) * integral for every s < 1; zero elsewhere."""
    s, a, *extra = np.broadcast_arrays(s, a, *extra)
    out = np.zeros(s.shape)
    inside = s < 1.0
    if inside.any():
        c = s[inside]
        a_in = a[inside]
        span = 1.0 - c
        integral = adaptive_gauss_legendre(
            integrand,
            c,
            a_in,
            oscillations=8.0 * a_in * c * span,
            quad=quad,
            extra=[col[inside] for col in extra],
        )
        out[inside] = (4.0 / np.pi) * integral * scale(span)
    return out


def defocused_otf_exact(s, ar_over_lambda, quad: Optional[QuadratureSpec] = None):
    """Defocused OTF by adaptive quadrature of the one-dimensional pupil integral."""
    quad = quad or DEFAULT_QUADRATURE
    s = _frequency(s)
    a = _severity(ar_over_lambda)
    out = _segment_batch(s, a, quad, _circle_integrand, scale=lambda span: span**1.5)
    return _scalar_or_array(out)


def chord_approx(x, theta: float, k: float):
    """k-chord sin(theta)(1 - (x / (1 - cos theta))^k) standing in for the circle arc."""
    if k <= 0:
        raise OpticsError(f"chord exponent must be positive, got {k}")
    span = 1.0 - math.cos(theta)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > span * (1.0 + 1e-12)):
        raise OpticsError(f"x must lie in [0, {span:.6g}]")
    t = np.minimum(x / span, 1.0)
    return _scalar_or_array(math.sin(theta) * (1.0 - t**k))


def defocused_otf_chord(s, ar_over_lambda, k: float, quad: Optional[QuadratureSpec] = None):
    """Defocused OTF with the arc replaced by the k-chord, by quadrature."""
    quad = quad or DEFAULT_QUADRATURE
    if np.any(np.asarray(k) <= 0):
        raise OpticsError("chord exponent must be positive")
    s = _frequency(s)
    a = _severity(ar_over_lambda)
    out = _segment_batch(
        s, a, quad, _chord_integrand, extra=(np.asarray(k, dtype=float),), scale=lambda span: span
    )
    return _scalar_or_array(out)


def _k1_numerator(s, a):
    theta = np.arccos(np.minimum(s, 1.0))
    half = np.sin(theta / 2.0) ** 2
    return half * np.sin(theta) * np.sinc(8.0 * a * np.cos(theta) * half) ** 2


def defocused_otf_approx_k1(s, ar_over_lambda):
    """Closed-form OTF for the straight chord (k = 1)."""
    s = _frequency(s)
    a = _severity(ar_over_lambda)
    h = (4.0 / np.pi) * _k1_numerator(s, a)
    return _scalar_or_array(np.where(s >= 1.0, 0.0, h))


def defocus_transfer(
    s,
    ar_over_lambda,
    quad: Optional[QuadratureSpec] = None,
    mode: str = "exact",
) -> TransferSample:
    """Defocused over aberration-free OTF at one wavelength.

    s = 1 is 0/0; it returns the limit (1 in focus, 0 otherwise) and sets the
    limit flag. Beyond the cutoff the transfer is 0.
    """
    if mode not in ("exact", "approx"):
        raise OpticsError(f"mode must be 'exact' or 'approx', got {mode!r}")
    s = _frequency(s)
    a = _severity(ar_over_lambda)
    s, a = np.broadcast_arrays(s, a)
    value = np.zeros(s.shape)
    inside = s < 1.0
    if inside.any():
        s_in, a_in = s[inside], a[inside]
        theta = np.arccos(s_in)
        if mode == "exact":
            ratio = defocused_otf_exact(s_in, a_in, quad) / diffraction_otf(s_in)
            value[inside] = np.where(a_in == 0.0, 1.0, ratio)
        else:
            value[inside] = 2.0 * _k1_numerator(s_in, a_in) / (theta - 0.5 * np.sin(2.0 * theta))
    limit = s == 1.0
    value[limit] = np.where(a[limit] == 0.0, 1.0, 0.0)
    return TransferSample(_scalar_or_array(value), _scalar_or_array(limit))


def k_of_theta(theta):
    """Chord exponent that makes the k-chord pass through the arc mid-point."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta >= np.pi / 2):
        raise OpticsError("theta must lie strictly inside (0, pi/2)")
    return _scalar_or_array(_k_unchecked(theta))


def _k_unchecked(theta):
    sin_t = np.sin(theta)
    num = np.log((sin_t - np.sin(theta / 2.0)) / sin_t)
    den = np.log((np.cos(theta / 2.0) - np.cos(theta)) / (1.0 - np.cos(theta)))
    # theta -> 0 limit: log(1/2) / log(3/4)
    small = theta < 1e-4
    return np.where(small, math.log(0.5) / math.log(0.75), num / np.where(small, 1.0, den))


def mean_k(n_nodes: int = 128) -> float:
    """Average chord exponent over theta in (0, pi/2)."""
    nodes, weights = gauss_legendre_unit(n_nodes)
    theta = 0.5 * np.pi * nodes
    # (2/pi) * integral over [0, pi/2] equals the unit-interval average
    return float(np.sum(weights * _k_unchecked(theta)))


def predict_zero_extrema(ar_over_lambda: float) -> FringeAnalysis:
    """Zero and extremum frequencies of the k = 1 approximation."""
    a = abs(float(ar_over_lambda))
    zeros: List[float] = []
    extrema: List[float] = []
    level = 1.0
    while level < a:
        half_gap = math.sqrt(0.25 - level / (4.0 * a))
        pair = [0.5 - half_gap, 0.5 + half_gap]
        (zeros if level.is_integer() else extrema).extend(pair)
        level += 0.5
    return FringeAnalysis(
        zero_locations=tuple(sorted(zeros)),
        extremum_locations=tuple(sorted(extrema)),
        fringe_period=fringe_period(a),
    )


def fringe_period(ar_over_lambda: float, linear: bool = True) -> Optional[float]:
    """Spacing of the first two zeros below s = 1/2, in s units; None up to severity 2.

    linear=False returns the difference of the two predicted zeros themselves.
    """
    a = abs(float(ar_over_lambda))
    if a <= 2.0:
        return None
    if linear:
        return 1.0 / (2.0 * (FRINGE_SLOPE * a - FRINGE_OFFSET))
    return math.sqrt(0.25 - 1.0 / (4.0 * a)) - math.sqrt(0.25 - 2.0 / (4.0 * a))


def find_zeros_numeric(
    ar_over_lambda: float,
    quad: Optional[QuadratureSpec] = None,
    grid_points: int = ROOT_GRID_POINTS,
) -> List[float]:
    """Sign changes of the exact OTF on a uniform s grid, refined by bisection."""
    a = abs(float(ar_over_lambda))
    if a == 0:
        return []
    quad = quad or DEFAULT_QUADRATURE
    grid = np.linspace(0.0, 1.0, grid_points)[:-1]
    values = defocused_otf_exact(grid, a, quad)
    crossings = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    roots = [
        bisect(lambda x: defocused_otf_exact(x, a, quad), grid[i], grid[i + 1], xtol=ROOT_TOLERANCE)
        for i in crossings
    ]
    roots += [float(grid[i]) for i in np.flatnonzero(values == 0.0)]
    logger.debug("[MonoOTF] severity %.4g: %d numeric zeros", a, len(roots))
    return sorted(roots)


def zero_onset(
    pair: int = 1,
    quad: Optional[QuadratureSpec] = None,
    lo: float = 0.0,
    hi: float = 3.0,
    tolerance: float = 1e-3,
) -> float:
    """Smallest severity at which the given zero pair (1 = first) appears numerically."""
    if pair < 1:
        raise OpticsError("pair index starts at 1")
    needed = 2 * pair - 1

    def present(a: float) -> bool:
        return len(find_zeros_numeric(a, quad)) >= needed

    if present(lo) or not present(hi):
        raise OpticsError(f"zero pair {pair} onset is not bracketed by [{lo}, {hi}]")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if present(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
