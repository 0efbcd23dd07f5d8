import numpy as np
import pytest

from cpdm.metric_core import RunContext
from cpdm.spaces import EuclideanSpace

_CRITERIA = []


@pytest.fixture
def ctx():
    return RunContext(seed=0)


@pytest.fixture
def line013():
    return EuclideanSpace([[0.0], [1.0], [3.0]])


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(label, ok, detail)``."""
    def record(label, ok, detail=""):
        _CRITERIA.append((label, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")


def all_pairs_min(space):
    """Independent closest-pair oracle: plain double loop over dist()."""
    best = np.inf
    for i in range(space.size):
        for j in range(i + 1, space.size):
            best = min(best, space.dist(i, j))
    return best
