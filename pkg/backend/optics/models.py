"""Value types shared by the optics modules.

Lengths are in metres throughout. Pixel-unit quantities (sigma, blur in
pixels) say so in their field names.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import GeometryError, OpticsError


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class CameraConfig(_Frozen):
    """Physical camera settings: f, f-number, focused depth d_f and pixel pitch P."""

    focal_length: float = Field(gt=0)
    f_number: float = Field(ge=1)
    focus_distance: float = Field(gt=0)
    pixel_pitch: float = Field(gt=0)

    @classmethod
    def build(cls, **values) -> "CameraConfig":
        """Construct and report violations as GeometryError."""
        try:
            config = cls(**values)
        except ValidationError as e:
            raise GeometryError(f"Invalid camera settings: {e.errors()[0]['msg']}") from e
        if config.focus_distance <= config.focal_length:
            raise GeometryError(
                f"focus_distance {config.focus_distance} m must exceed "
                f"focal_length {config.focal_length} m"
            )
        return config

    @property
    def aperture_diameter(self) -> float:
        return self.focal_length / self.f_number

    def with_focal_length(self, focal_length: float) -> "CameraConfig":
        return self.model_copy(update={"focal_length": focal_length})


class DerivedOptics(_Frozen):
    """Image-side quantities that follow from a CameraConfig."""

    image_distance: float
    # d_i - f, kept separately so the lens law inverts without cancellation
    image_offset: float = Field(gt=0)
    aperture_diameter: float
    in_focus_blur_scale: float
    ar_per_coc: float = Field(gt=0)


class DefocusState(_Frozen):
    """One out-of-focus condition; all three fields share a sign."""

    depth_offset: float
    coc_diameter: float
    wavefront_coefficient: float

    @classmethod
    def in_focus(cls) -> "DefocusState":
        return cls(depth_offset=0.0, coc_diameter=0.0, wavefront_coefficient=0.0)


class DepthGrid(_Frozen):
    relative_half_range: float
    point_count: int = Field(ge=2)
    offsets: Tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float)


class QuadratureSpec(_Frozen):
    """Node budget and tolerance of the oscillatory Gauss-Legendre rule."""

    base_nodes: int = Field(default=32, ge=16)
    nodes_per_oscillation: int = Field(default=16, ge=8)
    absolute_tolerance: float = Field(default=1e-9, gt=0)
    max_nodes: int = Field(default=1 << 16, ge=16)

    @model_validator(mode="after")
    def _budget_covers_base(self):
        if self.max_nodes < self.base_nodes:
            raise ValueError("max_nodes must be at least base_nodes")
        return self


class SpectralModel(_Frozen):
    """Black-body illumination band. Defaults approximate sunlight."""

    lambda_min: float = Field(default=200e-9, gt=0)
    lambda_max: float = Field(default=2e-6, gt=0)
    temperature: float = Field(default=6000.0, gt=0)
    lambda_samples: int = Field(default=256, ge=16)

    @model_validator(mode="after")
    def _ordered_band(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be below lambda_max")
        return self

    @property
    def wavelengths(self) -> np.ndarray:
        return np.linspace(self.lambda_min, self.lambda_max, self.lambda_samples)


class FringeAnalysis(_Frozen):
    zero_locations: Tuple[float, ...] = ()
    extremum_locations: Tuple[float, ...] = ()
    fringe_period: Optional[float] = None


class GaussianFitResult(_Frozen):
    sigma: float = Field(ge=0)
    mae: float
    rmse: float
    matched_area: float


class FrequencyAxis(str, Enum):
    NORMALIZED_TO_CUTOFF = "normalized_to_cutoff"
    CYCLES_PER_PIXEL = "cycles_per_pixel"


@dataclass(frozen=True, eq=False)
class OtfCurve:
    """Sampled transfer function on a declared frequency axis."""

    axis: FrequencyAxis
    frequencies: np.ndarray
    values: np.ndarray
    config: Optional[CameraConfig] = None
    state: Optional[DefocusState] = None
    limit_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if freqs.ndim != 1 or freqs.shape != vals.shape:
            raise OpticsError("frequencies and values must be 1-D arrays of equal length")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise OpticsError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "OtfCurve":
        return OtfCurve(
            axis=self.axis,
            frequencies=self.frequencies,
            values=np.asarray(values, dtype=float),
            config=self.config,
            state=self.state,
        )

    def __len__(self) -> int:
        return int(self.frequencies.size)
