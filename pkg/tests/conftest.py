import pytest

from backend.config import ENV_KEYS, get_settings
from backend.optics.models import CameraConfig, QuadratureSpec, SpectralModel


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Each test starts from default settings in its own working directory."""
    for key in list(ENV_KEYS) + ["DEFOCUS_CONFIG"]:
        monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def reference_camera():
    # f=15 mm, f/1.4, focused at 1 m, 5.6 um pixels
    return CameraConfig.build(
        focal_length=0.015, f_number=1.4, focus_distance=1.0, pixel_pitch=5.6e-6
    )


@pytest.fixture
def fast_quad():
    return QuadratureSpec(absolute_tolerance=1e-8)


@pytest.fixture
def starved_quad():
    """A node budget too small for any integral to converge."""
    return QuadratureSpec(base_nodes=16, nodes_per_oscillation=8, max_nodes=16)


@pytest.fixture
def coarse_spectral():
    return SpectralModel(lambda_samples=32)


@pytest.fixture
def coarse_config_file(tmp_path):
    """Config file with small spectral and frequency grids."""
    path = tmp_path / "coarse.env"
    path.write_text(
        "SPECTRAL_LAMBDA_SAMPLES=16\n"
        "FREQ_SAMPLES=33\n"
        "DEPTH_POINTS=3\n"
    )
    return str(path)


@pytest.fixture
def starved_config_file(tmp_path):
    path = tmp_path / "starved.env"
    path.write_text(
        "QUAD_BASE_NODES=16\n"
        "QUAD_NODES_PER_OSCILLATION=8\n"
        "QUAD_MAX_NODES=16\n"
        "SPECTRAL_LAMBDA_SAMPLES=16\n"
        "FREQ_SAMPLES=33\n"
        "DEPTH_POINTS=3\n"
    )
    return str(path)
