"""
Defocus OTF numerics: thin-lens geometry, monochrome and black-body OTFs,
and the equal-area Gaussian fit.
"""
from .errors import (
    ConfigError,
    FitError,
    FrequencyError,
    GeometryError,
    OpticsError,
    QuadratureError,
    TableSchemaError,
)
from .models import (
    CameraConfig,
    DefocusState,
    DepthGrid,
    DerivedOptics,
    FrequencyAxis,
    FringeAnalysis,
    GaussianFitResult,
    OtfCurve,
    QuadratureSpec,
    SpectralModel,
)

__all__ = [
    "CameraConfig",
    "ConfigError",
    "DefocusState",
    "DepthGrid",
    "DerivedOptics",
    "FitError",
    "FrequencyAxis",
    "FrequencyError",
    "FringeAnalysis",
    "GaussianFitResult",
    "GeometryError",
    "OpticsError",
    "OtfCurve",
    "QuadratureError",
    "QuadratureSpec",
    "SpectralModel",
    "TableSchemaError",
]
