import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_psd(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(rank, dim)) + 1j * rng.normal(size=(rank, dim))
    return g.conj().T @ g


THETA_GRID = (0.2, 0.3, 0.5, 0.7, math.pi / 4)


def gghz_case(theta):
    """(family, params) for a theta grid point; pi/4 goes through the GHZ constructor."""
    if theta == math.pi / 4:
        return "ghz", {}
    return "gghz", {"theta": theta}


C_GRID = [(c0, c1) for c0 in (0.15, 0.3, 0.45) for c1 in (0.15, 0.3, 0.5)]
D_GRID = (0.15, 0.3, 0.5)
