import numpy as np
import pytest

from delta_ilc.dynamics import RigidModel, true_plant
from delta_ilc.params import RobotParams

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return RobotParams()


@pytest.fixture(scope="session")
def nominal(params):
    return RigidModel(params)


@pytest.fixture(scope="session")
def plant(params):
    return true_plant(params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
