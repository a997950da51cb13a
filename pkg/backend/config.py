"""Runtime settings from defaults, the environment (.env) and an optional key=value file."""
import logging
import os
import re
from functools import lru_cache
from typing import Dict, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, ValidationError

from .optics.errors import ConfigError
from .optics.models import QuadratureSpec, SpectralModel

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

LENGTH_UNITS = {
    "nm": 1e-9,
    "um": 1e-6,
    "µm": 1e-6,
    "mm": 1e-3,
    "cm": 1e-2,
    "m": 1.0,
}
_LENGTH_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(nm|um|µm|mm|cm|m)\s*$")


def parse_length(text: str) -> float:
    """'15mm' -> 0.015. A unit suffix is required."""
    match = _LENGTH_PATTERN.match(str(text))
    if not match:
        raise ConfigError(
            f"Invalid length {text!r}: expected a number with a unit ({', '.join(LENGTH_UNITS)})"
        )
    return float(match.group(1)) * LENGTH_UNITS[match.group(2)]


class Settings(BaseModel):
    jobs: int = Field(default=1, ge=1)
    output_dir: str = "generated"
    log_level: str = "INFO"
    host: str = "localhost"
    port: int = Field(default=8000, gt=0)
    quad_base_nodes: int = 32
    quad_nodes_per_oscillation: int = 16
    quad_absolute_tolerance: float = 1e-9
    quad_max_nodes: int = 1 << 16
    spectral_lambda_min: float = 200e-9
    spectral_lambda_max: float = 2e-6
    spectral_temperature: float = 6000.0
    spectral_lambda_samples: int = 256
    freq_samples: int = Field(default=257, ge=32)
    depth_points: int = Field(default=21, ge=2)

    def quadrature(self) -> QuadratureSpec:
        return _checked(
            QuadratureSpec,
            base_nodes=self.quad_base_nodes,
            nodes_per_oscillation=self.quad_nodes_per_oscillation,
            absolute_tolerance=self.quad_absolute_tolerance,
            max_nodes=self.quad_max_nodes,
        )

    def spectral(self) -> SpectralModel:
        return _checked(
            SpectralModel,
            lambda_min=self.spectral_lambda_min,
            lambda_max=self.spectral_lambda_max,
            temperature=self.spectral_temperature,
            lambda_samples=self.spectral_lambda_samples,
        )


# environment name -> Settings field
ENV_KEYS = {
    "DEFOCUS_JOBS": "jobs",
    "DEFOCUS_OUTPUT_DIR": "output_dir",
    "LOG_LEVEL": "log_level",
    "BACKEND_HOST": "host",
    "BACKEND_PORT": "port",
    "QUAD_BASE_NODES": "quad_base_nodes",
    "QUAD_NODES_PER_OSCILLATION": "quad_nodes_per_oscillation",
    "QUAD_ABSOLUTE_TOLERANCE": "quad_absolute_tolerance",
    "QUAD_MAX_NODES": "quad_max_nodes",
    "SPECTRAL_LAMBDA_MIN": "spectral_lambda_min",
    "SPECTRAL_LAMBDA_MAX": "spectral_lambda_max",
    "SPECTRAL_TEMPERATURE": "spectral_temperature",
    "SPECTRAL_LAMBDA_SAMPLES": "spectral_lambda_samples",
    "FREQ_SAMPLES": "freq_samples",
    "DEPTH_POINTS": "depth_points",
}
LENGTH_KEYS = {"SPECTRAL_LAMBDA_MIN", "SPECTRAL_LAMBDA_MAX"}


def _checked(model, **values):
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e.errors()[0]['msg']}") from e


def _convert(key: str, value: str):
    return parse_length(value) if key in LENGTH_KEYS else value


def read_config_file(path: str) -> Dict[str, str]:
    """key=value pairs of a config file; every key must be a known setting."""
    if not os.path.isfile(path):
        raise ConfigError(f"Config file {path} not found")
    values = dotenv_values(path)
    for key in values:
        if key not in ENV_KEYS:
            raise ConfigError(f"Unknown config key {key!r} in {path}")
    return {k: v for k, v in values.items() if v is not None}


@lru_cache(maxsize=None)
def get_settings(config_file: Optional[str] = None) -> Settings:
    """Settings from defaults, then environment, then the config file."""
    load_dotenv()
    raw = {key: os.environ[key] for key in ENV_KEYS if key in os.environ}
    config_file = config_file or os.getenv("DEFOCUS_CONFIG")
    if config_file:
        raw.update(read_config_file(config_file))
    values = {ENV_KEYS[key]: _convert(key, value) for key, value in raw.items()}
    settings = _checked(Settings, **values)
    # fail early on inconsistent numerics
    settings.quadrature()
    settings.spectral()
    return settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root handler once."""
    name = (level or "INFO").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ConfigError(f"Unknown log level {level!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)
