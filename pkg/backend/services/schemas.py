"""Records and grids exchanged by the sweep, the table writer and the API."""
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..optics.gaussian_fit import linear_fit_r2
from ..optics.geometry import DEFAULT_DEPTH_POINTS
from ..optics.models import CameraConfig

MICRON = 1e-6
MILLIMETRE = 1e-3

# Focused depth at which the depth-collapsed table is evaluated
REFERENCE_FOCUS_DISTANCE = 10.0


class SweepGrid(BaseModel):
    """Discrete camera settings to enumerate; lengths in metres, C_max in pixels."""

    model_config = ConfigDict(frozen=True)

    f_numbers: Tuple[float, ...] = Field(min_length=1)
    focus_distances: Tuple[float, ...] = Field(min_length=1)
    c_max_values: Tuple[float, ...] = Field(min_length=1)
    pixel_pitches: Tuple[float, ...] = Field(min_length=1)
    eta: float = Field(default=0.1, gt=0, lt=1)
    n_depth: int = Field(default=DEFAULT_DEPTH_POINTS, ge=2)
    reference_focus_distance: float = Field(default=REFERENCE_FOCUS_DISTANCE, gt=0)

    @field_validator("f_numbers", "focus_distances", "c_max_values", "pixel_pitches")
    @classmethod
    def _sorted_positive(cls, values):
        if any(v <= 0 for v in values):
            raise ValueError("grid values must be positive")
        return tuple(sorted(set(values)))

    @classmethod
    def standard(cls) -> "SweepGrid":
        return cls(
            f_numbers=(1.0, 1.4, 2.0, 2.8, 4.0),
            focus_distances=(1.0, 5.0, 10.0, 20.0, 40.0, 70.0, 100.0),
            c_max_values=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0),
            pixel_pitches=tuple(p * MICRON for p in (1.0, 2.0, 4.0, 5.6, 8.0)),
        )

    @classmethod
    def reduced(cls) -> "SweepGrid":
        """Small grid for quick checks."""
        return cls(
            f_numbers=(1.4, 2.8, 4.0),
            focus_distances=(1.0, 10.0, 100.0),
            c_max_values=(1.0, 3.0),
            pixel_pitches=(2.0 * MICRON, 5.6 * MICRON),
        )

    def settings(self, collapse_depth: bool = False) -> Iterator[Tuple[Optional[float], float, float, float]]:
        """(d_f, f_n, C_max, P) tuples in lexicographic order; d_f is None when collapsed."""
        depths = (None,) if collapse_depth else self.focus_distances
        return product(depths, self.f_numbers, self.c_max_values, self.pixel_pitches)

    def size(self, collapse_depth: bool = False) -> int:
        n = len(self.f_numbers) * len(self.c_max_values) * len(self.pixel_pitches)
        return n if collapse_depth else n * len(self.focus_distances)


class SweepRecord(BaseModel):
    """One row of a sweep table. A failed evaluation keeps sigma/mae empty and sets error."""

    model_config = ConfigDict(frozen=True)

    focus_distance: Optional[float] = None
    f_number: float
    c_max: float
    pixel_pitch: float
    focal_length: Optional[float] = None
    sigma_max: Optional[float] = None
    mae_max: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.sigma_max is not None


class FilterCriteria(BaseModel):
    """Acceptance thresholds; sigma bounds are in pixel multiples."""

    mae_threshold: float = Field(default=0.01, gt=0)
    sigma_lower: float = Field(default=1.0, gt=0)
    sigma_upper: float = Field(default=5.0, gt=0)
    pixel_max: float = Field(default=5.6 * MICRON, gt=0)
    focal_max: Optional[float] = Field(default=100 * MILLIMETRE, gt=0)
    pixel_exact: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _ordered_sigma(self):
        if not self.sigma_lower < self.sigma_upper:
            raise ValueError("sigma_lower must be below sigma_upper")
        return self


class DepthStatistics(BaseModel):
    """Per-focused-depth summary of accepted records."""

    focus_distance: float
    count: int
    pixel_min: float
    pixel_max: float
    focal_min: float
    focal_max: float
    f_number_min: float
    f_number_max: float


@dataclass(frozen=True, eq=False)
class DepthProfile:
    """Per-depth blur, wavefront and fit results for one settings tuple."""

    config: CameraConfig
    offsets: np.ndarray
    coc: np.ndarray
    wavefront: np.ndarray
    sigma: np.ndarray
    mae: np.ndarray
    rmse: np.ndarray

    @property
    def defocused(self) -> np.ndarray:
        return self.coc != 0.0

    @property
    def sigma_max(self) -> float:
        return float(np.max(self.sigma[self.defocused]))

    @property
    def mae_max(self) -> float:
        return float(np.max(self.mae[self.defocused]))

    @property
    def worst_offset(self) -> float:
        mask = self.defocused
        return float(self.offsets[mask][np.argmax(self.sigma[mask])])

    def coc_pixels(self) -> np.ndarray:
        return self.coc / self.config.pixel_pitch

    def sigma_linearity(self) -> float:
        """R^2 of the straight-line fit of sigma against |C| in pixels."""
        mask = self.defocused
        return linear_fit_r2(np.abs(self.coc_pixels()[mask]), self.sigma[mask])[2]
