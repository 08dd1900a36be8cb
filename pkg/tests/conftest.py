# tests/conftest.py
import json
import logging

import pytest

from fracbec.application.ground_state import solve_q_petviashvili
from fracbec.domain.potentials import PotentialSpec, Zero
from fracbec.domain.spectral import SpectralGrid


@pytest.fixture(autouse=True)
def reset_package_logger():
    """The CLI installs its own handler; give caplog the package logger back after each test."""
    yield
    logger = logging.getLogger("fracbec")
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture
def small_grid():
    return SpectralGrid(256, 16.0)


@pytest.fixture
def grid():
    return SpectralGrid(1024, 32.0)


@pytest.fixture
def sqrt_potential():
    return PotentialSpec((Zero(0.0, 0.5),))


@pytest.fixture
def two_well_potential():
    return PotentialSpec((Zero(-1.0, 0.5), Zero(1.0, 0.75)))


@pytest.fixture
def symmetric_potential():
    return PotentialSpec((Zero(-1.0, 0.5), Zero(1.0, 0.5)))


@pytest.fixture(scope="session")
def ground():
    """Q on the default run grid, shared by every test that needs a* or Q."""
    return solve_q_petviashvili(SpectralGrid(8192, 256.0), tol=1e-10, max_iter=2000)


@pytest.fixture
def config_data():
    """A small, fast run configuration in config-file layout."""
    return {
        "grid": {"length": 32.0, "n_points": 1024},
        "potentials": {
            "v1": {"zeros": [{"location": 0.0, "exponent": 0.5}]},
            "v2": {"zeros": [{"location": 0.0, "exponent": 0.5}]},
        },
        "ground_state": {"grid": {"length": 64.0, "n_points": 2048}},
        "seed": 0,
    }


@pytest.fixture
def write_config(tmp_path):
    """Writes a config document to tmp_path and returns its path."""

    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2))
        return path

    return _write
