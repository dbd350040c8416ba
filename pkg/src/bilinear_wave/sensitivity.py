"""First and second linearized state equations.

``z = S'(u)[h]`` solves ``z'' + z' = Δz + uz + h y`` and
``ζ = S''(u)[h1, h2]`` solves ``ζ'' + ζ' = Δζ + uζ + h1 z2 + h2 z1``, both with
zero initial data.  Products of a control direction with a trajectory are
sampled with the scheme's ``(1, 2, 1)/4`` time average, which makes ``z`` and
``ζ`` the exact derivatives of the discrete control-to-state map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import check_spacetime
from .state import StateTrajectory, WaveProblem, march, time_average, velocity


@dataclass(frozen=True)
class LinearizedTrajectory:
    z: np.ndarray
    dz: np.ndarray
    tag: str = ""


def _solve(p: WaveProblem, source: np.ndarray, tag: str) -> LinearizedTrajectory:
    z = march(p.grid, p.time, p.u, source)
    return LinearizedTrajectory(z, velocity(z, p.time.dt, np.zeros(p.grid.size)), tag)


def linearized_source(tr: StateTrajectory, h: np.ndarray) -> np.ndarray:
    return h * time_average(tr.y)


def solve_linearized(
    p: WaveProblem, tr: StateTrajectory, h: np.ndarray, tag: str = "h"
) -> LinearizedTrajectory:
    h = check_spacetime(h, p.time, p.grid)
    return _solve(p, linearized_source(tr, h), tag)


def solve_second_linearized(
    p: WaveProblem,
    tr: StateTrajectory,
    h1: np.ndarray,
    z1: LinearizedTrajectory,
    h2: np.ndarray,
    z2: LinearizedTrajectory,
) -> LinearizedTrajectory:
    h1 = check_spacetime(h1, p.time, p.grid)
    h2 = check_spacetime(h2, p.time, p.grid)
    source = h1 * time_average(z2.z) + h2 * time_average(z1.z)
    return _solve(p, source, f"({z1.tag},{z2.tag})")
