import math

import numpy as np
import pytest

from cylwave.waveguide import Parabolic, Step, make_spec


def step_v(V: float):
    """Step-index fiber with k = R = n_cl = 1 and normalized frequency ``V``."""
    n0 = math.sqrt(1.0 + V * V)
    return make_spec(1.0, n0, 1.0, 1.0, Step(n0))


@pytest.fixture(scope="session")
def free_space():
    return make_spec(1.0, 1.0, 1.0, 1.0, Step(1.0))


@pytest.fixture(scope="session")
def step2():
    return step_v(2.0)


@pytest.fixture(scope="session")
def step5():
    return step_v(5.0)


@pytest.fixture(scope="session")
def step8():
    return step_v(8.0)


@pytest.fixture(scope="session")
def parabolic5():
    n0 = math.sqrt(26.0)
    return make_spec(1.0, n0, 1.0, 1.0, Parabolic(n0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
