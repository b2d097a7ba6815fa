import math

import pytest
from hypothesis import HealthCheck, settings

from phasebound import make_potential

settings.register_profile(
    "phasebound",
    deadline=None,
    max_examples=15,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("phasebound")


@pytest.fixture(scope="session")
def lorentzian():
    return make_potential("lorentzian", U0=1.0, d=1.0)


@pytest.fixture(scope="session")
def zero():
    return make_potential("sech", U0=0.0, d=1.0)


@pytest.fixture(scope="session")
def half_delta():
    return make_potential("delta", G=math.pi / 2)


_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record the one-line verdict of an acceptance criterion."""

    def _report(number: int, ok: bool, text: str):
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {text}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[n])
