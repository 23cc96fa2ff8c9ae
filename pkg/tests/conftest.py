import math

import numpy as np
import pytest

from bilipapprox.curve import PLCurve
from bilipapprox.testkit import right_angle

# Lines collected by the acceptance suite, printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ra():
    return right_angle()


@pytest.fixture
def straight2():
    return PLCurve([0.0, 1.0], [[0.0, 0.0], [2.0, 0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


SQRT2 = math.sqrt(2.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
