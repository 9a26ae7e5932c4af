from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from green500kit import kernels
from green500kit.methodology import RunRecord
from green500kit.telemetry import PowerTrace

PAPER_NODE_EFFICIENCIES = [5154.1, 5260.1, 5248.4, 5245.5, 5125.1, 5301.2, 5169.3]

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def hpl_trace():
    """100 W to 70 s, then linear decay to 50 W at 100 s."""
    return PowerTrace("hpl", [0.0, 70.0, 100.0], [100.0, 100.0, 50.0])


@pytest.fixture
def run100():
    return RunRecord(0.0, 100.0, 301500.0, 1, 1)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


@st.composite
def piecewise_traces(draw, min_points=2, max_points=25, t_max=1000.0):
    """Random strictly increasing times with non-negative power."""
    n = draw(st.integers(min_points, max_points))
    gaps = draw(st.lists(st.floats(0.01, 50.0), min_size=n - 1, max_size=n - 1))
    t0 = draw(st.floats(-t_max, t_max))
    t = np.concatenate(([t0], t0 + np.cumsum(gaps)))
    p = np.array(draw(st.lists(st.floats(0.0, 5000.0, allow_subnormal=False), min_size=n, max_size=n)))
    if not np.all(np.diff(t) > 0):
        t = t0 + np.arange(n, dtype=float)
    return PowerTrace("h", t, p)
