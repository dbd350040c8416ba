import sys
from dataclasses import replace

import numpy as np
import pytest

from bilinear_wave.domain import SpatialGrid, TimeGrid
from bilinear_wave.state import WaveProblem, march


def sine(grid, k=1):
    shape = np.ones(grid.size)
    for x, L in zip(grid.coordinates(), grid.extent):
        shape = shape * np.sin(k * np.pi * x / L)
    return shape


def make_problem(n=15, m=64, horizon=2.0, *, y0=None, y1=0.0, f=0.0, u=0.0,
                 alpha=-1.0, beta=1.0, gamma=1.0, yd=0.0, grid=None):
    """Small 1D problem; ``y0`` defaults to the first sine mode."""
    g = SpatialGrid.interval(n) if grid is None else grid
    tg = TimeGrid(horizon, m)
    y0 = sine(g) if y0 is None else y0
    y1 = np.full(g.size, y1) if np.ndim(y1) == 0 else y1
    return WaveProblem(g, tg, y0, y1, f, u, alpha, beta, gamma, yd)


def tracking_problem(n=15, m=64, horizon=2.0, **kw):
    """Target built from a nonzero control so the optimum is interior and nontrivial."""
    p = make_problem(n, m, horizon, **kw)
    t = p.time.nodes[:, None]
    x = p.grid.coordinates()[0][None, :]
    u_true = 0.5 * np.sin(np.pi * x) * np.cos(np.pi * t / horizon)
    yd = march(p.grid, p.time, u_true, p.f, p.y0, p.y1)
    return replace(p, yd=yd)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_problem():
    return tracking_problem()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
