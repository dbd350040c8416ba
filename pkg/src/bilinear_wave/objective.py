"""Tracking cost, its adjoint gradient and the Hessian form.

    J(u) = ½ ||y_u - y_d||²_Q + (γ/2) ||u||²_Q
    J'(u)[h] = <φ y + γ u, h>_Q
    J''(u)[h1, h2] = <z1, z2>_Q + <φ, h1 z2 + h2 z1>_Q + γ <h1, h2>_Q

All inner products use :func:`~bilinear_wave.domain.spacetime_inner`.  The
gradient is returned as the field ``g`` representing ``J'(u)`` in that inner
product.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adjoint import AdjointTrajectory, adjoint_for_source, solve_adjoint
from .domain import check_spacetime, control_norm, spacetime_inner, spacetime_norm_l2
from .sensitivity import solve_linearized
from .state import (
    StateTrajectory,
    WaveProblem,
    repr_float,
    solve_forward,
    time_average,
    time_average_transpose,
)


@dataclass
class CostReport:
    J: float
    tracking_part: float
    control_part: float
    kkt_residual: float = float("nan")
    gradient_norm_l2: float = float("nan")

    def to_text(self) -> str:
        """``key=value`` lines."""
        return "".join(f"{k}={repr_float(v)}\n" for k, v in asdict(self).items())

    def csv_row(self) -> list[str]:
        return [repr_float(v) for v in asdict(self).values()]

    @staticmethod
    def csv_header() -> list[str]:
        return ["J", "tracking_part", "control_part", "kkt_residual", "gradient_norm_l2"]


def write_reports_csv(path: str | Path, reports: list[CostReport], extra: dict | None = None) -> Path:
    path = Path(path)
    extra = extra or {}
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*extra.keys(), *CostReport.csv_header()])
        for i, r in enumerate(reports):
            w.writerow([*(repr_float(v[i]) for v in extra.values()), *r.csv_row()])
    return path


@dataclass
class GradientField:
    """Gradient ``g = φ ȳ + γ u`` with the solves it was built from."""

    g: np.ndarray
    state: StateTrajectory = field(repr=False)
    adjoint: AdjointTrajectory = field(repr=False)


def cost_parts(p: WaveProblem, tr: StateTrajectory) -> CostReport:
    tracking = 0.5 * spacetime_norm_l2(tr.y - p.yd, p.time, p.grid) ** 2
    control = 0.5 * p.gamma * spacetime_norm_l2(p.u, p.time, p.grid) ** 2
    return CostReport(tracking + control, tracking, control)


def evaluate_cost(p: WaveProblem) -> CostReport:
    return cost_parts(p, solve_forward(p))


def cost(p: WaveProblem) -> float:
    return evaluate_cost(p).J


def gradient(
    p: WaveProblem, tr: StateTrajectory | None = None, method: str = "discrete"
) -> GradientField:
    """Adjoint gradient of ``J`` at ``p.u``.

    ``method="continuous"`` uses the reversed forward kernel for ``φ`` and the
    nodal state; it is only consistent up to the discretization error.
    """
    tr = solve_forward(p) if tr is None else tr
    adj = solve_adjoint(p, tr, method)
    ybar = time_average(tr.y) if method == "discrete" else tr.y
    return GradientField(adj.phi * ybar + p.gamma * p.u, tr, adj)


def directional_derivative(p: WaveProblem, h: np.ndarray, grad: GradientField | None = None) -> float:
    h = check_spacetime(h, p.time, p.grid)
    grad = gradient(p) if grad is None else grad
    return spacetime_inner(grad.g, h, p.time, p.grid)


def directional_derivative_linearized(p: WaveProblem, h: np.ndarray) -> float:
    """``<y - y_d, z>_Q + γ <u, h>_Q`` with ``z`` from the linearized solve."""
    tr = solve_forward(p)
    z = solve_linearized(p, tr, h).z
    return spacetime_inner(tr.y - p.yd, z, p.time, p.grid) + p.gamma * spacetime_inner(
        p.u, h, p.time, p.grid
    )


def hessian_terms(
    p: WaveProblem,
    h1: np.ndarray,
    h2: np.ndarray,
    grad: GradientField | None = None,
) -> tuple[float, float, float]:
    """The three integrals ``<z1,z2>``, ``<φ, h1 z̄2 + h2 z̄1>``, ``γ<h1,h2>``."""
    h1 = check_spacetime(h1, p.time, p.grid)
    h2 = check_spacetime(h2, p.time, p.grid)
    grad = gradient(p) if grad is None else grad
    tr, phi = grad.state, grad.adjoint.phi
    z1 = solve_linearized(p, tr, h1).z
    z2 = z1 if h2 is h1 else solve_linearized(p, tr, h2).z
    tg, g = p.time, p.grid
    a = spacetime_inner(z1, z2, tg, g)
    b = spacetime_inner(phi, h1 * time_average(z2) + h2 * time_average(z1), tg, g)
    c = p.gamma * spacetime_inner(h1, h2, tg, g)
    return a, b, c


def second_derivative(
    p: WaveProblem, h1: np.ndarray, h2: np.ndarray, grad: GradientField | None = None
) -> float:
    return float(sum(hessian_terms(p, h1, h2, grad)))


def hessian_apply(p: WaveProblem, h: np.ndarray, grad: GradientField | None = None) -> np.ndarray:
    """Field ``H h`` with ``J''(u)[h, k] = <H h, k>_Q`` for every ``k``.

    Needs one linearized solve and one extra adjoint solve.
    """
    h = check_spacetime(h, p.time, p.grid)
    grad = gradient(p) if grad is None else grad
    tr, phi = grad.state, grad.adjoint.phi
    z = solve_linearized(p, tr, h).z
    w = p.time.weights()[:, None]
    # <φ, h z̄_k> is a functional of z_k; pull the averaging back onto the weights
    pulled = time_average_transpose(w * phi * h) / w
    second = adjoint_for_source(p, z + pulled).phi
    return second * time_average(tr.y) + phi * time_average(z) + p.gamma * h


def derivative_bound_probe(
    p: WaveProblem, u1: np.ndarray, u2: np.ndarray, h1: np.ndarray, h2: np.ndarray
) -> tuple[float, float, float, float]:
    """Measured ratios for the four derivative bounds, in the discrete ``U`` norm.

    Zero denominators give a ratio of 0.
    """
    tg = p.time
    n1, n2, nd = control_norm(h1, tg), control_norm(h2, tg), control_norm(u1 - u2, tg)
    p1, p2 = p.with_control(u1), p.with_control(u2)
    g1 = gradient(p1)
    d1 = directional_derivative(p1, h1, g1)

    def ratio(num, den):
        return float(abs(num) / den) if den > 0 else 0.0

    r1 = ratio(d1, n1)
    r2 = ratio(second_derivative(p1, h1, h2, g1), n1 * n2)
    if nd == 0.0:
        return r1, r2, 0.0, 0.0
    g2 = gradient(p2)
    r3 = ratio(d1 - directional_derivative(p2, h1, g2), nd * n1)
    r4 = ratio(
        second_derivative(p1, h1, h1, g1) - second_derivative(p2, h1, h1, g2), nd * n1**2
    )
    return r1, r2, r3, r4
