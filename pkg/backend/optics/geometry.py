"""Thin-lens geometry: lens law, circle of confusion and the depth grid.

Sign convention: a scene point nearer than the focused plane has a negative
depth offset and a negative blur diameter C; the wavefront coefficient A_R
carries the same sign. Transfer functions depend on |A_R| only.
"""
import math

import numpy as np

from .errors import GeometryError
from .models import CameraConfig, DefocusState, DepthGrid, DerivedOptics

# |depth offset| allowed by depth_from_coc, in multiples of d_f
DEPTH_OUT_OF_RANGE_CAP = 10.0
DEFAULT_DEPTH_POINTS = 21


def _require_real_image(config: CameraConfig) -> None:
    if config.focus_distance <= config.focal_length:
        raise GeometryError(
            f"No real image: focus_distance {config.focus_distance} m "
            f"<= focal_length {config.focal_length} m"
        )


def derive_optics(config: CameraConfig) -> DerivedOptics:
    """Image distance, aperture, in-focus blur scale C_o and the A_R/C ratio."""
    _require_real_image(config)
    f = config.focal_length
    d_f = config.focus_distance
    aperture = f / config.f_number
    image_offset = f * f / (d_f - f)
    image_distance = f + image_offset
    return DerivedOptics(
        image_distance=image_distance,
        image_offset=image_offset,
        aperture_diameter=aperture,
        in_focus_blur_scale=aperture * f / (d_f - f),
        ar_per_coc=aperture / (8.0 * image_distance),
    )


def focus_from_image_offset(focal_length: float, image_offset: float) -> float:
    """Lens law solved for the focused depth from d_i - f: d_f = f + f^2 / (d_i - f)."""
    if image_offset <= 0:
        raise GeometryError(f"image_offset {image_offset} m must be positive (d_i > f)")
    return focal_length + focal_length * focal_length / image_offset


def focus_from_image_distance(focal_length: float, image_distance: float) -> float:
    """Lens law solved for the focused depth: d_f = f d_i / (d_i - f).

    Loses about eps d_f / f relative precision to the subtraction; use
    focus_from_image_offset when d_i - f is known.
    """
    if image_distance <= focal_length:
        raise GeometryError(
            f"image_distance {image_distance} m must exceed focal_length {focal_length} m"
        )
    return focus_from_image_offset(focal_length, image_distance - focal_length)


def coc_from_depth(config: CameraConfig, depth_offset: float) -> DefocusState:
    """Blur-circle diameter and wavefront coefficient of a scene point at d_f + depth_offset."""
    d_f = config.focus_distance
    if d_f + depth_offset <= 0:
        raise GeometryError(
            f"Scene point behind the lens plane: d_f + offset = {d_f + depth_offset} m"
        )
    optics = derive_optics(config)
    coc = depth_offset * optics.in_focus_blur_scale / (d_f + depth_offset)
    return DefocusState(
        depth_offset=depth_offset,
        coc_diameter=coc,
        wavefront_coefficient=optics.ar_per_coc * coc,
    )


def state_from_coc(config: CameraConfig, coc_diameter: float) -> DefocusState:
    """DefocusState for a given blur-circle diameter."""
    depth_offset = depth_from_coc(config, coc_diameter)
    optics = derive_optics(config)
    return DefocusState(
        depth_offset=depth_offset,
        coc_diameter=coc_diameter,
        wavefront_coefficient=optics.ar_per_coc * coc_diameter,
    )


def state_from_wavefront(config: CameraConfig, wavefront_coefficient: float) -> DefocusState:
    """DefocusState for a given wavefront coefficient A_R."""
    return state_from_coc(config, wavefront_coefficient / derive_optics(config).ar_per_coc)


def depth_from_coc(
    config: CameraConfig,
    coc_diameter: float,
    cap: float = DEPTH_OUT_OF_RANGE_CAP,
) -> float:
    """Inverse of coc_from_depth: depth offset = C d_f / (C_o - C)."""
    optics = derive_optics(config)
    c_o = optics.in_focus_blur_scale
    if coc_diameter >= c_o:
        raise GeometryError(
            f"Blur diameter {coc_diameter} m reaches C_o = {c_o} m (point at infinity)"
        )
    d_f = config.focus_distance
    offset = coc_diameter * d_f / (c_o - coc_diameter)
    if abs(offset) > cap * d_f:
        raise GeometryError(
            f"Depth offset {offset:.6g} m exceeds {cap:g} x focus distance"
        )
    return offset


def max_coc(config: CameraConfig, eta: float) -> float:
    """Largest |C| over depth offsets in [-eta d_f, eta d_f]; attained at -eta d_f."""
    if not 0 < eta < 1:
        raise GeometryError(f"eta must lie in (0, 1), got {eta}")
    _require_real_image(config)
    f = config.focal_length
    return (eta / (1.0 - eta)) * config.aperture_diameter * f / (config.focus_distance - f)


def focal_for_cmax(d_f: float, f_number: float, c_max: float, eta: float) -> float:
    """Focal length whose max_coc over +-eta d_f equals c_max (positive quadratic root)."""
    if d_f <= 0 or f_number <= 0 or c_max <= 0:
        raise GeometryError("d_f, f_number and c_max must be positive")
    if not 0 < eta < 1:
        raise GeometryError(f"eta must lie in (0, 1), got {eta}")
    c_m = (1.0 - eta) / eta * c_max
    ratio = 4.0 * d_f / (c_m * f_number)
    # (C_m f_n / 2)(sqrt(1 + r) - 1) rewritten without the subtraction
    return 2.0 * d_f / (math.sqrt(1.0 + ratio) + 1.0)


def depth_grid(d_f: float, eta: float, n_points: int = DEFAULT_DEPTH_POINTS) -> DepthGrid:
    """N_d equally spaced depth offsets spanning exactly [-eta d_f, +eta d_f]."""
    if n_points < 2:
        raise GeometryError(f"A depth grid needs at least 2 points, got {n_points}")
    if not 0 < eta < 1:
        raise GeometryError(f"eta must lie in (0, 1), got {eta}")
    steps = 2 * np.arange(n_points) - n_points + 1
    offsets = eta * d_f * (steps / (n_points - 1))
    return DepthGrid(
        relative_half_range=eta,
        point_count=n_points,
        offsets=tuple(float(x) for x in offsets),
    )


def defocus_wavefront(normalized_radius, a_r: float):
    """Path-length error a_r * r^2 at normalized pupil radius r."""
    r = np.asarray(normalized_radius, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise GeometryError("normalized pupil radius must lie in [0, 1]")
    w = a_r * r**2
    return float(w) if w.ndim == 0 else w
