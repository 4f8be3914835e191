import numpy as np
import pytest

from rcrmimo.constellation import Constellation
from rcrmimo.relaxation import default_for

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["psk4", "psk8", "psk16", "qam16", "qam64"])
def constellation(request):
    return Constellation.from_name(request.param)


@pytest.fixture
def psk16():
    return Constellation.from_name("psk16")


@pytest.fixture
def qam16():
    return Constellation.from_name("qam16")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
