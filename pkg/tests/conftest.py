import math
from fractions import Fraction

import pytest

from rydrevival.packet import build_packet
from rydrevival.spectrum import HydrogenSpectrum, StarkSpectrum, tune_field

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def hydrogen():
    return HydrogenSpectrum()


@pytest.fixture(scope="session")
def scales45(hydrogen):
    return hydrogen.time_scales(45)


@pytest.fixture(scope="session")
def packet45(hydrogen):
    return build_packet(hydrogen, 45, 2.5, 10)


@pytest.fixture(scope="session")
def stark24():
    """Stark spectrum at nbar = 24 with t_rev^(n)/t_rev^(nk) = 1/12 and its scales."""
    spec = StarkSpectrum(tune_field(24, Fraction(1, 12)).field_exact)
    return spec, spec.time_scales(24)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
