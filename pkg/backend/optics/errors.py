"""Exception types raised by the optics package."""
from typing import Optional


class OpticsError(ValueError):
    """Base class for rejected optics inputs."""


class GeometryError(OpticsError):
    """Camera geometry or depth value with no physical image."""


class FrequencyError(OpticsError):
    """Normalized frequency outside its domain."""


class FitError(OpticsError):
    """Curve that cannot be matched by the Gaussian model."""


class ConfigError(ValueError):
    """Bad configuration key or unit string."""


class TableSchemaError(ValueError):
    """Table whose columns match no known schema."""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of its node budget."""

    def __init__(
        self,
        message: str,
        s: Optional[float] = None,
        ar_over_lambda: Optional[float] = None,
        u: Optional[float] = None,
        wavelength: Optional[float] = None,
    ):
        super().__init__(message)
        self.s = s
        self.ar_over_lambda = ar_over_lambda
        self.u = u
        self.wavelength = wavelength
        self.depth_index: Optional[int] = None

    def at_sample(self, u: float, wavelength: float) -> "QuadratureError":
        """Return a copy tagged with the spectral sample it failed on."""
        return QuadratureError(
            f"{self} (u={u:.6g} cycles/pixel, lambda={wavelength:.6g} m)",
            s=self.s,
            ar_over_lambda=self.ar_over_lambda,
            u=u,
            wavelength=wavelength,
        )

    def at_depth(self, index: int) -> "QuadratureError":
        """Return a copy naming the depth-grid index it failed on."""
        error = QuadratureError(
            f"depth index {index}: {self}",
            s=self.s,
            ar_over_lambda=self.ar_over_lambda,
            u=self.u,
            wavelength=self.wavelength,
        )
        error.depth_index = index
        return error
