"""Shared simulation runs for the test suite."""

import pytest

from dremlab.harness.simulation import run
from dremlab.models import Law
from dremlab.presets import THETA0_VARIANTS, preset_run_config


@pytest.fixture(scope="session")
def exp_a_trace():
    """exp-a, all three laws, theta0 = 0, full horizon."""
    return run(preset_run_config("exp-a", eig_method="lapack"))


@pytest.fixture(scope="session")
def exp_a_near_trace():
    """exp-a started at theta0 = (0, -10, 14)."""
    cfg = preset_run_config(
        "exp-a",
        eig_method="lapack",
        laws=[Law.DREM_REGULARIZED],
        theta0=THETA0_VARIANTS["near"],
    )
    return run(cfg)


@pytest.fixture(scope="session")
def exp_b1_trace():
    """exp-b1 over its full 20 s horizon, theta0 = (0, 5, 0)."""
    cfg = preset_run_config(
        "exp-b1",
        eig_method="lapack",
        laws=[Law.DREM_REGULARIZED],
        theta0=THETA0_VARIANTS["offset"],
        log_stride=20,
    )
    return run(cfg)


@pytest.fixture(scope="session")
def exp_b2_trace():
    """exp-b2, regularized law only, theta0 = 0."""
    cfg = preset_run_config("exp-b2", eig_method="lapack", laws=[Law.DREM_REGULARIZED])
    return run(cfg)
