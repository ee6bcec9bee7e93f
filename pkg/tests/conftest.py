import numpy as np
import pytest

from epochdd import LinearModelSpec

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fig2_spec():
    """Two-feature model with the Figure 2 parameters and no noise."""
    return LinearModelSpec([1.0, 0.15], [1.5, 10.0], 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
