import numpy as np
import pytest

from holarchy.plans import make_plan_set

ACCEPTANCE_LINES = []


def plan_sets(rng, N, k, d, costs=None):
    costs = np.arange(k) if costs is None else costs
    return [make_plan_set(i, rng.standard_normal((k, d)), costs) for i in range(N)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""
    def _report(number, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        print(ACCEPTANCE_LINES[-1])
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
