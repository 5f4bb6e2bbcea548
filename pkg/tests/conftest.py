import pytest

from semiglobal.action import make_context
from semiglobal.potential import parse_potential

# one PASS/FAIL line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def context(potential: str, E: float, hbar: float, **kw):
    return make_context(parse_potential(potential), E, hbar, **kw)


@pytest.fixture(scope="session")
def harmonic_ctx():
    """V = q**2/2 at the 21st level, hbar = 0.05."""
    return context("harmonic:1", 0.05 * 20.5, 0.05)


@pytest.fixture(scope="session")
def linear_ctx():
    """V = -q, E = 0, hbar = 0.1: turning point at the origin."""
    return context("linear:1", 0.0, 0.1)


@pytest.fixture(scope="session")
def free_ctx():
    """V = 0, E = 1/2, hbar = 1: plane waves exp(+-iq)."""
    return context("free:", 0.5, 1.0)
