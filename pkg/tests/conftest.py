import numpy as np
import pytest

from wssus_bounds import BrickScattering, GridParams, LinkBudget, SpatialSpectrum
from wssus_bounds.mi import McSpec

FIG1_P = 1.26e8


@pytest.fixture
def brick():
    return BrickScattering(50.0, 5e-6)


@pytest.fixture
def grid(brick):
    return GridParams.matched(brick, 1.25)


@pytest.fixture
def spec3():
    return SpatialSpectrum.uncorrelated(3, 3)


@pytest.fixture
def link():
    return LinkBudget(FIG1_P, 1.0)


@pytest.fixture
def small_mc():
    return McSpec(outer=2000, inner=64, seed=7)


def random_grid(rng, spread, n_nu=6, n_tau=5):
    """Random nonnegative lattice with support [-nu0, nu0] x [-tau0, tau0] and 4 nu0 tau0 = spread."""
    tau0 = 5e-6
    nu0 = spread / (4 * tau0)
    from wssus_bounds import SampledScattering

    vals = rng.uniform(0.0, 1.0, size=(n_nu, n_tau)) ** 2
    vals[rng.integers(n_nu), rng.integers(n_tau)] += 1.0
    return SampledScattering(np.linspace(-nu0, nu0, n_nu), np.linspace(-tau0, tau0, n_tau), vals)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
