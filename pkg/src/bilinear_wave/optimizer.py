"""Projected gradient with Armijo backtracking over the box ``α <= u <= β``,
plus the first- and second-order diagnostics at the returned control.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import spacetime_inner, spacetime_norm_l2
from .errors import DegenerateCone, LineSearchStalled
from .objective import CostReport, GradientField, cost_parts, gradient, hessian_apply, second_derivative
from .state import WaveProblem, repr_float, solve_forward, time_average

log = logging.getLogger(__name__)

STEP_FLOOR = 1e-14


@dataclass
class OptimizerConfig:
    max_iter: int = 500
    kkt_tol: float = 1e-6
    armijo_slope: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    active_set_eps: float = 1e-8
    rayleigh_samples: int = 64
    rayleigh_power_iters: int = 50

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if not 0 < self.armijo_slope < 1:
            raise ValueError("armijo_slope must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.active_set_eps < 0:
            raise ValueError("active_set_eps must be non-negative")
        if self.rayleigh_samples < 1 or self.rayleigh_power_iters < 0:
            raise ValueError("rayleigh_samples >= 1 and rayleigh_power_iters >= 0 required")


@dataclass
class IterateRecord:
    iter: int
    J: float
    tracking_part: float
    control_part: float
    grad_norm: float
    kkt_residual: float
    step: float
    n_backtracks: int


@dataclass
class SecondOrderReport:
    min_quotient: float
    direction_id: int
    quotients: list[float]
    necessary: bool | None
    sufficient: bool | None
    verdict: str
    tol: float


@dataclass
class OptimizeResult:
    u: np.ndarray
    history: list[IterateRecord]
    active_lower: np.ndarray
    active_upper: np.ndarray
    converged: bool
    report: CostReport
    gradient: GradientField = field(repr=False)
    second_order: SecondOrderReport | None = None

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


@dataclass
class CriticalDirection:
    h: np.ndarray
    satisfies_sign_conditions: bool
    gradient_pairing: float
    seed: int = 0


def project(w: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Pointwise clip onto ``[α, β]``."""
    if np.any(np.asarray(alpha) > np.asarray(beta)):
        raise ValueError("bounds inverted: alpha > beta somewhere")
    return np.minimum(np.maximum(w, alpha), beta)


def projection_argument(p: WaveProblem, grad: GradientField) -> np.ndarray:
    """``-φ ȳ / γ``, the point the optimal control is the projection of."""
    return -grad.adjoint.phi * time_average(grad.state.y) / p.gamma


def kkt_residual(p: WaveProblem, grad: GradientField | None = None) -> float:
    """``||u - Π_[α,β](-φ ȳ / γ)||_Q``."""
    grad = gradient(p) if grad is None else grad
    target = project(projection_argument(p, grad), p.alpha, p.beta)
    return spacetime_norm_l2(p.u - target, p.time, p.grid)


def active_sets(
    u: np.ndarray, alpha: np.ndarray, beta: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of the nodes where ``u`` sits on ``α`` resp. ``β``."""
    return np.abs(u - alpha) <= eps, np.abs(u - beta) <= eps


def _evaluate(p: WaveProblem) -> tuple[CostReport, GradientField]:
    tr = solve_forward(p)
    rep = cost_parts(p, tr)
    grad = gradient(p, tr)
    rep.gradient_norm_l2 = spacetime_norm_l2(grad.g, p.time, p.grid)
    rep.kkt_residual = kkt_residual(p, grad)
    return rep, grad


def projected_gradient_solve(p: WaveProblem, cfg: OptimizerConfig | None = None) -> OptimizeResult:
    """Minimize ``J`` over the box starting from ``Π(p.u)``."""
    cfg = OptimizerConfig() if cfg is None else cfg
    tg, g = p.time, p.grid
    p = p.with_control(project(p.u, p.alpha, p.beta))
    rep, grad = _evaluate(p)
    history = [IterateRecord(0, rep.J, rep.tracking_part, rep.control_part,
                             rep.gradient_norm_l2, rep.kkt_residual, 0.0, 0)]
    it = 0
    while rep.kkt_residual > cfg.kkt_tol and it < cfg.max_iter:
        it += 1
        s, backtracks = cfg.initial_step, 0
        while True:
            trial_u = project(p.u - s * grad.g, p.alpha, p.beta)
            trial = p.with_control(trial_u)
            trial_tr = solve_forward(trial)
            trial_rep = cost_parts(trial, trial_tr)
            decrease = spacetime_inner(grad.g, trial_u - p.u, tg, g)
            if trial_rep.J <= rep.J + cfg.armijo_slope * decrease:
                break
            s *= cfg.backtrack
            backtracks += 1
            if s < STEP_FLOOR:
                raise LineSearchStalled(f"iteration {it}: no Armijo step above {STEP_FLOOR}")
        p = trial
        grad = gradient(p, trial_tr)
        rep = trial_rep
        rep.gradient_norm_l2 = spacetime_norm_l2(grad.g, tg, g)
        rep.kkt_residual = kkt_residual(p, grad)
        history.append(IterateRecord(it, rep.J, rep.tracking_part, rep.control_part,
                                     rep.gradient_norm_l2, rep.kkt_residual, s, backtracks))
        log.debug("iter %d J=%.12g kkt=%.3g step=%g", it, rep.J, rep.kkt_residual, s)

    converged = rep.kkt_residual <= cfg.kkt_tol
    if not converged:
        log.warning("stopped after %d iterations with kkt residual %.3g", it, rep.kkt_residual)
    lower, upper = active_sets(p.u, p.alpha, p.beta, cfg.active_set_eps)
    return OptimizeResult(p.u, history, lower, upper, converged, rep, grad)


def write_history_csv(path: str | Path, result: OptimizeResult) -> Path:
    path = Path(path)
    cols = ["iter", "J", "tracking_part", "control_part", "grad_norm",
            "kkt_residual", "step", "n_backtracks"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for rec in result.history:
            w.writerow([rec.iter, *(repr_float(getattr(rec, c)) for c in cols[1:-1]),
                        rec.n_backtracks])
    return path


class CriticalCone:
    """Discrete critical cone at a converged control.

    Nodes are split into strongly active (on a bound, with the projection
    argument beyond it by more than ``eps``), weakly active (on a bound
    otherwise) and free.  Directions vanish on strongly active nodes and on
    nodes with ``α = β``, carry the admissible sign on weakly active nodes,
    and are orthogonal to the gradient on free nodes.
    """

    def __init__(self, p: WaveProblem, result: OptimizeResult, eps: float):
        self.p = p
        self.eps = eps
        self.g = result.gradient.g
        arg = projection_argument(p, result.gradient)
        lower, upper = result.active_lower, result.active_upper
        pinned = np.abs(p.beta - p.alpha) <= eps
        self.strong = pinned | (lower & (arg < p.alpha - eps)) | (upper & (arg > p.beta + eps))
        self.weak_lower = lower & ~self.strong
        self.weak_upper = upper & ~self.strong & ~self.weak_lower
        self.free = ~(lower | upper | self.strong)

    def _norm(self, h):
        return spacetime_norm_l2(h, self.p.time, self.p.grid)

    def _inner(self, a, b):
        return spacetime_inner(a, b, self.p.time, self.p.grid)

    def restrict(self, h: np.ndarray) -> np.ndarray:
        h = np.where(self.strong, 0.0, h)
        h = np.where(self.weak_lower, np.abs(h), h)
        h = np.where(self.weak_upper, -np.abs(h), h)
        g_free = np.where(self.free, self.g, 0.0)
        gg = self._inner(g_free, g_free)
        if np.sqrt(gg) > self.eps:
            h = h - (self._inner(g_free, h) / gg) * g_free
        return h

    def direction(self, h: np.ndarray, seed: int = 0) -> CriticalDirection:
        pairing = abs(self._inner(self.g, h))
        signs = (
            bool(np.all(h[self.weak_lower] >= 0))
            and bool(np.all(h[self.weak_upper] <= 0))
            and bool(np.all(h[self.strong] == 0))
        )
        ok = signs and pairing <= self.eps * max(self._norm(h), 1.0)
        return CriticalDirection(h, ok, pairing, seed)

    def sample(self, seed: int, attempts: int = 10) -> CriticalDirection:
        shape = self.p.shape
        for k in range(attempts):
            rng = np.random.default_rng(seed + k)
            h = self.restrict(rng.standard_normal(shape))
            nrm = self._norm(h)
            if nrm > self.eps:
                return self.direction(h / nrm, seed + k)
        raise DegenerateCone(f"no nonzero critical direction in {attempts} draws from seed {seed}")


def sample_critical_direction(
    p: WaveProblem, result: OptimizeResult, seed: int, eps: float = 1e-8
) -> CriticalDirection:
    return CriticalCone(p, result, eps).sample(seed)


def _coordinate_directions(cone: CriticalCone, count: int) -> list[np.ndarray]:
    """Localized bumps at free or weakly active nodes, pushed into the cone."""
    idx = np.flatnonzero(~cone.strong)
    if idx.size == 0:
        return []
    picks = idx[np.linspace(0, idx.size - 1, min(count, idx.size)).astype(int)]
    out = []
    for flat in picks:
        h = np.zeros(cone.p.shape)
        h.flat[flat] = 1.0
        h = cone.restrict(h)
        nrm = cone._norm(h)
        if nrm > cone.eps:
            out.append(h / nrm)
    return out


def second_order_report(
    p: WaveProblem, result: OptimizeResult, cfg: OptimizerConfig | None = None, seed: int = 0
) -> SecondOrderReport:
    """Sampled Rayleigh quotients ``J''(ū)[h,h] / ||h||²`` over the critical cone.

    Directions: ``cfg.rayleigh_samples`` random cone samples, a few localized
    ones, and ``cfg.rayleigh_power_iters`` steps of a cone-projected power
    iteration started from the best sample.  The minimum is an upper
    estimate of the true cone minimum.
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    p = p.with_control(result.u)
    tol = 1e-6 * p.gamma
    cone = CriticalCone(p, result, cfg.active_set_eps)
    grad = result.gradient

    dirs = []
    try:
        for i in range(cfg.rayleigh_samples):
            dirs.append(cone.sample(seed + 1000 * i).h)
    except DegenerateCone:
        return SecondOrderReport(float("nan"), -1, [], None, None, "vacuous", tol)
    dirs.extend(_coordinate_directions(cone, max(4, cfg.rayleigh_samples // 8)))

    def quotient(h):
        return second_derivative(p, h, h, grad) / cone._norm(h) ** 2

    with ThreadPoolExecutor() as pool:
        quotients = list(pool.map(quotient, dirs))

    if cfg.rayleigh_power_iters > 0:
        h = dirs[int(np.argmin(quotients))]
        hh = hessian_apply(p, h, grad)
        # shift above the top of the spectrum so the iteration targets the minimum
        shift = 2.0 * max(abs(cone._inner(hh, h)), p.gamma) + cone._norm(hh)
        for _ in range(cfg.rayleigh_power_iters):
            h = cone.restrict(shift * h - hh)
            nrm = cone._norm(h)
            if nrm <= cone.eps:
                break
            h = h / nrm
            hh = hessian_apply(p, h, grad)
            dirs.append(h)
            quotients.append(cone._inner(hh, h))

    i_min = int(np.argmin(quotients))
    mu = float(quotients[i_min])
    necessary = mu >= -tol
    sufficient = mu > tol
    verdict = "sufficient" if sufficient else ("necessary" if necessary else "violated")
    return SecondOrderReport(mu, i_min, [float(q) for q in quotients], necessary, sufficient,
                             verdict, tol)
