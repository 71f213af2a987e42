import numpy as np
import pytest

from growing_walks.geometry import StarDomain


@pytest.fixture
def ball():
    return StarDomain.ball(1.0, 3)


@pytest.fixture
def seven_point():
    """Frozen B_1.2 in Z^3: the origin and its six neighbours."""
    return StarDomain.ball(1.2, 3)


def unit(d, k, sign=1):
    e = np.zeros(d, dtype=np.int64)
    e[k] = sign
    return e


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[2:4])):
            terminalreporter.write_line(line)
