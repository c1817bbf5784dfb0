import math

import pytest

from seqweak.polarization import PolarizationState

ACCEPTANCE_LINES = []

HPOST_PRE = (0.588, 0.809)
HPOST_POST = (1.0, 0.0)
ANOMALOUS_PRE = (0.509, 0.861)
ANOMALOUS_POST = (-0.397, 0.918)


@pytest.fixture
def hpost():
    return (PolarizationState.from_amplitudes(*HPOST_PRE),
            PolarizationState.from_amplitudes(*HPOST_POST))


@pytest.fixture
def anomalous():
    return (PolarizationState.from_amplitudes(*ANOMALOUS_PRE),
            PolarizationState.from_amplitudes(*ANOMALOUS_POST))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gaussian_1d(z, center, sigma):
    """Pointer amplitude with |.|^2 a normal density of std ``sigma``."""
    return math.exp(-((z - center) ** 2) / (4 * sigma**2)) / (2 * math.pi * sigma**2) ** 0.25
