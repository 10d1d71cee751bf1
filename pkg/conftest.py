"""Shared fixtures for the kbgk test suite."""

import numpy as np
import pytest

from kbgk.boundary import WallSpec
from kbgk.constants import GAS_CONSTANT_ARGON
from kbgk.core import GasConstants, SolverConfig, build_regular_grid, build_velocity_grid
from kbgk.moments import MacroState

R = GAS_CONSTANT_ARGON


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size preset reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size preset run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def vgrid():
    return build_velocity_grid(10.0, 20)


@pytest.fixture
def coarse_vgrid():
    return build_velocity_grid(10.0, 13)


@pytest.fixture
def grid():
    return build_regular_grid(0.0, 1.0, 40)


@pytest.fixture
def sod_left():
    return MacroState.from_internal_energy(1e-4, (0.0, 0.0, 0.0), 2.5, R)


@pytest.fixture
def sod_right():
    return MacroState.from_internal_energy(1.25e-5, (0.0, 0.0, 0.0), 2.0, R)


@pytest.fixture
def walls():
    return (WallSpec.from_internal_energy("left", 2.5, R), WallSpec.from_internal_energy("right", 2.0, R))


@pytest.fixture
def small_config(sod_left, sod_right, walls):
    """Sod problem on a coarse grid; a few steps run in well under a second."""
    return SolverConfig(left=sod_left, right=sod_right, walls=walls, gas=GasConstants(),
                        n_x=40, n_v=12, t_final=0.02, lambda_left=0.001, lambda_right=0.008)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
