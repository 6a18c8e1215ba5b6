import numpy as np
import pytest

from ymh.fiber import FiberModel
from ymh.fields import FlowState, GaugeTransform
from ymh.grid import GridSpec


def random_state(n, kind, rng, a_scale=3.0, length=1.0):
    g = GridSpec(n, length)
    fib = FiberModel(kind)
    return FlowState(g, fib, a_scale * rng.standard_normal((2, n, n)), fib.random_points((n, n), rng))


def random_gauge(grid, rng, winding=None):
    w = tuple(int(v) for v in rng.integers(-2, 3, 2)) if winding is None else winding
    return GaugeTransform(rng.uniform(-np.pi, np.pi, (grid.n, grid.n)) * 3, w)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


def record_criterion(number, name, ok, detail=""):
    _ACCEPTANCE.append((number, name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}")
