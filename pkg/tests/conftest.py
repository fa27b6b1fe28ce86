import functools

import pytest

from seajoint.geometry import default_geometry
from seajoint.plant import PlantParams
from seajoint.simulator import SimConfig, run_simulation

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def _report(criterion: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    return _report


@pytest.fixture(scope="session")
def geom():
    return default_geometry()


@pytest.fixture(scope="session")
def params():
    return PlantParams()


@functools.lru_cache(maxsize=None)
def cached_run(cfg: SimConfig):
    """Closed-loop runs are deterministic, so identical configs can share a result."""
    return run_simulation(cfg)
