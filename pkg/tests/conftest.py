import json
from pathlib import Path

import numpy as np
import pytest

from quadftc.params import QuadParams

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture
def frozen():
    return FROZEN


@pytest.fixture
def params():
    return QuadParams()


@pytest.fixture
def hover():
    s = np.zeros(12)
    s[11] = -100.0
    return s


# Acceptance results, one entry per criterion, printed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
