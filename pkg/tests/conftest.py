import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from deltaprop.hamiltonians import SpatialGrid, StaticDeltaFamilySpec
from deltaprop.profiles import constant, expression

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sin2_coupling():
    """1 + sin^2 t written as 3/2 - cos(2t)/2."""
    return expression([{"type": "poly", "coeffs": [1.5]},
                       {"type": "cos", "amp": -0.5, "freq": 2.0}])


def two_delta_spec(window=(0.0, 10.0), autonomous=False):
    k1 = constant(1.0) if autonomous else sin2_coupling()
    return StaticDeltaFamilySpec([-2.0, 2.0], [k1, constant(2.0)],
                                 lipschitz=0.0 if autonomous else 1.0, window=window)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return SpatialGrid(20.0, 256)


@pytest.fixture
def configs_dir():
    from pathlib import Path

    return Path(__file__).resolve().parent.parent / "configs"
