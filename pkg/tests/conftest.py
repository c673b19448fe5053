import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lax_shortcuts.field import Grid1D
from lax_shortcuts.kdv import DEMO_PARAMS

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def demo():
    return DEMO_PARAMS


@pytest.fixture(scope="session")
def grid512():
    return Grid1D(-20.0, 20.0, 512)


@pytest.fixture(scope="session")
def grid1024():
    return Grid1D(-40.0, 40.0, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record ``(number, title, passed, detail)`` for the end-of-run acceptance report."""
    def record(number, title, passed, detail):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
