import numpy as np
import pytest

from nlslab.specfile import cubic, quadratic, single_cubic


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def quad():
    return quadratic(0.5)


@pytest.fixture
def cub():
    return cubic(3.0, 1.0)


@pytest.fixture
def scalar():
    return single_cubic()


# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
