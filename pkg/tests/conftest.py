import numpy as np
import pytest

from hawkesdrift.hawkes import HawkesParams

ACCEPTANCE_LINES = []


@pytest.fixture
def reference_params():
    return HawkesParams.reference()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
