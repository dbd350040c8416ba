"""Forward solver for the bilinear damped wave equation and its energy estimates.

The equation ``y'' + y' = Δy + u y + f`` with homogeneous Dirichlet data is
advanced by the three-level implicit average scheme

    (y⁺ - 2y + y⁻)/dt² + (y⁺ - y⁻)/(2 dt) = A_k (y⁺ + 2y + y⁻)/4 + F_k,
    A_k = Δ_h + diag(u_k),

started by a second-order Taylor step that uses the equation at ``t = 0``.
The same kernel (:func:`march`) integrates the linearized equations, which
only differ in the source ``F`` and in having zero initial data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import (
    SpatialGrid,
    TimeGrid,
    check_scalar,
    check_spacetime,
    forcing_norm,
    control_norm,
    laplacian_apply,
    laplacian_matrix,
    norm_h10,
    norm_hminus1,
    norm_l2,
    norm_l2_linf,
    norm_linf,
    norm_linf_l2,
    poincare_constant,
    slice_norms_l2,
    spacetime_norm_l2,
)
from .errors import InstabilityDetected, ShapeError, SingularStep

BLOWUP_FACTOR = 1e12
#: relative slack allowed on the energy inequalities (time-discretization error)
ENERGY_TOL = 1e-3


@dataclass(frozen=True)
class WaveProblem:
    """Grids, data, control, bounds and cost weights of one problem instance."""

    grid: SpatialGrid
    time: TimeGrid
    y0: np.ndarray
    y1: np.ndarray
    f: np.ndarray
    u: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    yd: np.ndarray

    def __post_init__(self):
        g, tg = self.grid, self.time
        for name in ("y0", "y1"):
            object.__setattr__(self, name, check_scalar(getattr(self, name), g))
        for name in ("f", "u", "alpha", "beta", "yd"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.ndim == 0:
                value = np.full((tg.steps + 1, g.size), float(value))
            object.__setattr__(self, name, check_spacetime(value, tg, g))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if np.any(self.alpha > self.beta):
            raise ValueError("bounds inverted: alpha > beta somewhere")

    def with_control(self, u: np.ndarray) -> WaveProblem:
        return replace(self, u=u)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.time.steps + 1, self.grid.size)


@dataclass(frozen=True)
class StateTrajectory:
    """Displacement ``y`` and velocity ``v`` at every time node."""

    y: np.ndarray
    v: np.ndarray
    grid: SpatialGrid
    time: TimeGrid


@dataclass
class EnergyReport:
    """Outcome of checking one a-priori estimate on a computed trajectory."""

    per_step: np.ndarray
    lhs: float
    constant: float
    rhs: float
    tol: float = ENERGY_TOL
    satisfied: bool = field(init=False)

    def __post_init__(self):
        self.satisfied = bool(self.lhs <= self.rhs * (1.0 + self.tol) + 1e-300)


class StepOperator:
    """Per-step pieces ``A_k x`` and ``(a I - A_k / 4)^{-1} b`` of the scheme."""

    def __init__(self, grid: SpatialGrid, time: TimeGrid, coef: np.ndarray):
        self.grid = grid
        self.time = time
        self.coef = coef
        self._cache_key = None
        self._cache_solver = None

    def apply(self, k: int, x: np.ndarray) -> np.ndarray:
        return laplacian_apply(x, self.grid) + self.coef[k] * x

    def solve(self, k: int, shift: float, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(shift I - A_k / 4) x = rhs``."""
        c = self.coef[k]
        if 0.25 * c.max() >= shift:
            raise SingularStep(
                f"step {k}: max control {c.max():.3g} too large for dt={self.time.dt:.3g}"
            )
        g = self.grid
        if g.dimension == 1:
            h = g.spacing[0]
            ab = np.empty((3, g.size))
            ab[0] = ab[2] = -0.25 / h**2
            ab[1] = shift + 0.5 / h**2 - 0.25 * c
            try:
                x = scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SingularStep(f"step {k}: {exc}") from exc
        else:
            key = (shift, c.tobytes())
            if key != self._cache_key:
                mat = shift * sp.identity(g.size) - 0.25 * (laplacian_matrix(g) + sp.diags(c))
                try:
                    self._cache_solver = spla.factorized(sp.csc_matrix(mat))
                except RuntimeError as exc:
                    raise SingularStep(f"step {k}: {exc}") from exc
                self._cache_key = key
            x = self._cache_solver(rhs)
        return x


def march(
    grid: SpatialGrid,
    time: TimeGrid,
    coef: np.ndarray,
    source: np.ndarray,
    y0: np.ndarray | None = None,
    v0: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate ``y'' + y' = (Δ_h + coef) y + source`` and return all slices.

    ``source[k]`` is the right-hand side attached to node ``k``; node ``0``
    feeds the startup step, nodes ``1 .. m-1`` the three-level steps and the
    last node is unused.
    """
    m, dt = time.steps, time.dt
    y0 = np.zeros(grid.size) if y0 is None else y0
    v0 = np.zeros(grid.size) if v0 is None else v0
    ops = StepOperator(grid, time, coef)

    scale = max(norm_linf(y0), norm_linf(v0), norm_linf(source))
    limit = BLOWUP_FACTOR * scale
    y = np.zeros((m + 1, grid.size))
    if scale == 0.0:
        return y

    a_p = 1.0 / dt**2 + 0.5 / dt
    a_r = 1.0 / dt**2 - 0.5 / dt
    y[0] = y0
    y[1] = y0 + dt * v0 + 0.5 * dt**2 * (ops.apply(0, y0) + source[0] - v0)
    for k in range(1, m):
        rhs = (
            source[k]
            + (2.0 / dt**2) * y[k]
            + 0.5 * ops.apply(k, y[k])
            - a_r * y[k - 1]
            + 0.25 * ops.apply(k, y[k - 1])
        )
        y[k + 1] = ops.solve(k, a_p, rhs)
        peak = np.max(np.abs(y[k + 1]))
        if not np.isfinite(peak) or peak > limit:
            raise InstabilityDetected(f"slice {k + 1} reached {peak:.3g} (limit {limit:.3g})")
    return y


def velocity(y: np.ndarray, dt: float, v0: np.ndarray) -> np.ndarray:
    """Centered differences inside, ``v0`` at the start, one-sided at the end."""
    v = np.empty_like(y)
    v[0] = v0
    v[1:-1] = (y[2:] - y[:-2]) / (2.0 * dt)
    if len(y) > 2:
        v[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dt)
    else:
        v[-1] = (y[-1] - y[-2]) / dt
    return v


def time_average(y: np.ndarray) -> np.ndarray:
    """The scheme's ``(1, 2, 1)/4`` weighting of a trajectory at each node.

    This is how the bilinear product ``u y`` is sampled by the scheme, so
    products with a control direction must use it to stay consistent.
    """
    out = y.copy()
    out[1:-1] = 0.25 * (y[2:] + 2.0 * y[1:-1] + y[:-2])
    return out


def time_average_transpose(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[0] = c[0]
    out[-1] = c[-1]
    out[1:-1] += 0.5 * c[1:-1]
    out[:-2] += 0.25 * c[1:-1]
    out[2:] += 0.25 * c[1:-1]
    return out


def solve_forward(p: WaveProblem) -> StateTrajectory:
    """State trajectory for the control stored in ``p``."""
    y = march(p.grid, p.time, p.u, p.f, p.y0, p.y1)
    return StateTrajectory(y=y, v=velocity(y, p.time.dt, p.y1), grid=p.grid, time=p.time)


def energy(tr: StateTrajectory, k: int) -> float:
    """``E = ½||v||² + ½||∇y||²`` at node ``k``."""
    if not 0 <= k <= tr.time.steps:
        raise IndexError(f"step {k} outside 0..{tr.time.steps}")
    return 0.5 * norm_l2(tr.v[k], tr.grid) ** 2 + 0.5 * norm_h10(tr.y[k], tr.grid) ** 2


def energies(tr: StateTrajectory) -> np.ndarray:
    return np.array([energy(tr, k) for k in range(tr.time.steps + 1)])


def acceleration(p: WaveProblem, tr: StateTrajectory) -> np.ndarray:
    """``y'' = Δ_h y + u y + f - v`` reconstructed at every node."""
    return laplacian_apply(tr.y, p.grid) + p.u * tr.y + p.f - tr.v


def _data_size(p: WaveProblem) -> float:
    return (
        norm_h10(p.y0, p.grid) ** 2
        + norm_l2(p.y1, p.grid) ** 2
        + spacetime_norm_l2(p.f, p.time, p.grid) ** 2
    )


def growth_constant(p: WaveProblem) -> float:
    """``exp(c_Ω ||u||²_{L2(0,T;L∞)})``."""
    return float(np.exp(poincare_constant(p.grid) * norm_l2_linf(p.u, p.time) ** 2))


def accel_constant(p: WaveProblem) -> float:
    c_omega = poincare_constant(p.grid)
    return 3.0 * (1.0 + np.sqrt(c_omega) * norm_linf(p.u)) ** 2 * growth_constant(p)


def verify_energy_estimate(
    p: WaveProblem, tr: StateTrajectory, tol: float = ENERGY_TOL
) -> EnergyReport:
    """Check ``sup_k (||∇y||² + ||v||²) <= c_{u,T} (||∇y0||² + ||y1||² + ||f||²)``."""
    g = p.grid
    per_step = np.array(
        [norm_h10(tr.y[k], g) ** 2 + norm_l2(tr.v[k], g) ** 2 for k in range(p.time.steps + 1)]
    )
    c = growth_constant(p)
    return EnergyReport(per_step, float(per_step.max()), c, c * _data_size(p), tol)


def verify_accel_estimate(
    p: WaveProblem, tr: StateTrajectory, tol: float = ENERGY_TOL
) -> EnergyReport:
    """Check the ``L∞(0,T;H⁻¹)`` bound on the reconstructed acceleration."""
    acc = acceleration(p, tr)
    per_step = np.array([norm_hminus1(a, p.grid) ** 2 for a in acc])
    c = accel_constant(p)
    rhs = c * _data_size(p) + 3.0 * norm_linf_l2(p.f, p.grid) ** 2
    return EnergyReport(per_step, float(per_step.max()), c, rhs, tol)


def _sup_norms(p: WaveProblem, tr: StateTrajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = p.grid
    grad = np.array([norm_h10(y, g) for y in tr.y])
    vel = slice_norms_l2(tr.v, g)
    acc = np.array([norm_hminus1(a, g) for a in acceleration(p, tr)])
    return grad, vel, acc


def lipschitz_probe(p1: WaveProblem, p2: WaveProblem) -> float:
    """Ratio of the state difference to the data difference.

    Numerator: ``sup||∇δy||² + sup||δv||² + sup||δy''||²_{H⁻¹}``; denominator:
    ``||δu||²_U + ||δf||²`` in the discrete intersection norms.  Identical
    inputs give 0.
    """
    if p1.grid != p2.grid or p1.time != p2.time:
        raise ShapeError("problems must share grids")
    if not (np.array_equal(p1.y0, p2.y0) and np.array_equal(p1.y1, p2.y1)):
        raise ValueError("problems must share initial data")
    du, df = p1.u - p2.u, p1.f - p2.f
    denom = control_norm(du, p1.time) ** 2 + forcing_norm(df, p1.time, p1.grid) ** 2
    if denom == 0.0:
        return 0.0
    tr1, tr2 = solve_forward(p1), solve_forward(p2)
    diff = StateTrajectory(tr1.y - tr2.y, tr1.v - tr2.v, p1.grid, p1.time)
    # the difference solves the linear system with u1 and source du*y2 + df
    dp = replace(p1, y0=np.zeros_like(p1.y0), y1=np.zeros_like(p1.y1), f=du * tr2.y + df)
    grad, vel, acc = _sup_norms(dp, diff)
    num = grad.max() ** 2 + vel.max() ** 2 + acc.max() ** 2
    return float(num / denom)


def export_csv(
    path: str | Path,
    grid: SpatialGrid,
    time: TimeGrid,
    values: np.ndarray,
    rates: np.ndarray,
    stride: int = 1,
    names: tuple[str, str] = ("y", "v"),
) -> Path:
    """Write ``t, x[, y-coordinate], value, rate`` rows for every ``stride``-th slice."""
    path = Path(path)
    coords = grid.coordinates()
    axes = ["x", "x2"][: grid.dimension]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *axes, *names])
        for k in range(0, time.steps + 1, stride):
            t = repr_float(time.nodes[k])
            for i in range(grid.size):
                w.writerow(
                    [t, *(repr_float(c[i]) for c in coords),
                     repr_float(values[k, i]), repr_float(rates[k, i])]
                )
    return path


def repr_float(x: float) -> str:
    return f"{float(x):.17g}"
