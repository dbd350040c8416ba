"""Backward adjoint equation ``φ'' - φ' = Δφ + uφ + (y - y_d)``.

Both variants integrate in reversed time ``s = T - t``, where the adjoint
becomes a forward damped wave equation with zero data:

``"discrete"`` (default)
    Runs the transpose of the forward time-stepping chain.  Pairing
    ``<z, w>_Q`` of any linearized solve with a source ``w`` then equals
    ``<s, φ_w>_Q`` to round-off, so gradients are exact for the discrete
    cost.
``"continuous"``
    Runs the forward kernel itself on the reversed coefficients.  This is
    the discretized continuous adjoint; it differs from the discrete one by
    ``O(dt² + dx²)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import SpatialGrid, TimeGrid, norm_hminus1, norm_l2, slice_norms_l2
from .state import StateTrajectory, StepOperator, WaveProblem, march, solve_forward


@dataclass(frozen=True)
class AdjointTrajectory:
    """Adjoint state and its time derivative at every node.

    ``terminal_decay`` holds ``(||φ(T)||, ||φ'(T)||_{H⁻¹})``; both are zero
    because the decay condition is imposed exactly at the truncated horizon.
    """

    phi: np.ndarray
    dphi: np.ndarray
    terminal_decay: tuple[float, float]
    grid: SpatialGrid
    time: TimeGrid


def reverse_time(w: np.ndarray) -> np.ndarray:
    return w[::-1].copy()


def _transposed_march(
    grid: SpatialGrid, time: TimeGrid, coef: np.ndarray, source: np.ndarray
) -> np.ndarray:
    """Transpose of :func:`march` (zero data) against the space-time inner product.

    Returns ``φ`` with ``sum_k W_k <w_k, z_k> = sum_k W_k <s_k, φ_k>`` for
    every ``z = march(..., source=s)``, ``W_k`` the trapezoidal weights.
    """
    m, dt = time.steps, time.dt
    vol = grid.cell_volume
    load = source * (time.weights() * vol)[:, None]
    ops = StepOperator(grid, time, coef)
    a_p = 1.0 / dt**2 + 0.5 / dt
    a_r = 1.0 / dt**2 - 0.5 / dt

    # mu[j] multiplies the three-level equation that produces slice j+1;
    # reversed time runs j = m-1, ..., 1 with mu[m] = mu[m+1] = 0.
    mu = np.zeros((m + 2, grid.size))

    def backward_rhs(j):
        rhs = load[j] + (2.0 / dt**2) * mu[j] - a_r * mu[j + 1]
        if 1 <= j <= m - 1:
            rhs += 0.5 * ops.apply(j, mu[j])
        if 1 <= j + 1 <= m - 1:
            rhs += 0.25 * ops.apply(j + 1, mu[j + 1])
        return rhs

    for j in range(m, 1, -1):
        mu[j - 1] = ops.solve(j - 1, a_p, backward_rhs(j))
    lam = backward_rhs(1)

    phi = np.zeros((m + 1, grid.size))
    phi[1:m] = mu[1:m] / (dt * vol)
    phi[0] = lam * dt / vol
    return phi


def _adjoint_velocity(phi: np.ndarray, dt: float) -> np.ndarray:
    """Centered inside, zero at the horizon, one-sided at ``t = 0``."""
    d = np.zeros_like(phi)
    d[1:-1] = (phi[2:] - phi[:-2]) / (2.0 * dt)
    if len(phi) > 2:
        d[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dt)
    else:
        d[0] = (phi[1] - phi[0]) / dt
    return d


def adjoint_for_source(
    p: WaveProblem, source: np.ndarray, method: str = "discrete"
) -> AdjointTrajectory:
    """Adjoint driven by an arbitrary space-time source instead of ``y - y_d``."""
    g, tg = p.grid, p.time
    if method == "discrete":
        phi = _transposed_march(g, tg, p.u, source)
    elif method == "continuous":
        psi = march(g, tg, reverse_time(p.u), reverse_time(source))
        phi = reverse_time(psi)
    else:
        raise ValueError(f"unknown adjoint method {method!r}")
    dphi = _adjoint_velocity(phi, tg.dt)
    decay = (norm_l2(phi[-1], g), norm_hminus1(dphi[-1], g))
    return AdjointTrajectory(phi, dphi, decay, g, tg)


def solve_adjoint(
    p: WaveProblem, tr: StateTrajectory, method: str = "discrete"
) -> AdjointTrajectory:
    """Adjoint state for the tracking residual ``y_u - y_d``."""
    return adjoint_for_source(p, tr.y - p.yd, method)


@dataclass
class DecayCertificate:
    horizon: float
    factor: int
    max_difference: float
    tail: float
    tail_phi: float
    tail_dphi: float


def decay_certificate(
    problem_at: Callable[[int], WaveProblem], factor: int = 2, method: str = "discrete"
) -> DecayCertificate:
    """Compare adjoints computed on ``[0, T]`` and ``[0, factor T]``.

    ``problem_at(k)`` must return the problem on the horizon ``k T`` with the
    same step size.  Reports the largest slice-wise L2 difference on
    ``[0, T]`` and the size ``||φ(T)|| + ||φ'(T)||_{H⁻¹}`` of the long-horizon
    adjoint at the short horizon.
    """
    if factor < 2:
        raise ValueError("factor must be at least 2")
    short, long = problem_at(1), problem_at(factor)
    adj_s = solve_adjoint(short, solve_forward(short), method)
    adj_l = solve_adjoint(long, solve_forward(long), method)
    m = short.time.steps
    g = short.grid
    diff = slice_norms_l2(adj_s.phi - adj_l.phi[: m + 1], g).max()
    tail_phi = norm_l2(adj_l.phi[m], g)
    tail_dphi = norm_hminus1(adj_l.dphi[m], g)
    return DecayCertificate(
        horizon=short.time.horizon,
        factor=factor,
        max_difference=float(diff),
        tail=tail_phi + tail_dphi,
        tail_phi=tail_phi,
        tail_dphi=tail_dphi,
    )
