import numpy as np
import pytest

from tclflex.fleet import FleetSpec, TclParams, default_ambient, sample_fleet

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ambient24():
    return default_ambient(24, 1.0)


@pytest.fixture(scope="session")
def small_fleet():
    return sample_fleet(FleetSpec(n=6, epsilon=0.2, seed=3))


@pytest.fixture
def unit_device():
    return TclParams()
