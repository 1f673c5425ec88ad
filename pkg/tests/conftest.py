import numpy as np
import pytest

from lifnet.params import StructuralParams, TrainableParams


@pytest.fixture
def sp():
    return StructuralParams()


@pytest.fixture
def active_params():
    """Parameters for which the default network spikes in every layer."""
    return TrainableParams([1.2, 0.4], [[2.0, 1.2, 2.6, 1.7, 0.9, 2.2, 1.4, 2.9]], 1.3,
                           [0.8, -0.6, 0.3, -0.9, 0.5, 0.7, -0.4, 0.2])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
