"""Numerical checks of every estimate and optimality condition, run as a suite.

Each check returns a :class:`CheckResult`; :func:`run_verify_suite` collects
them into a :class:`VerifySuiteReport` whose overall status fails iff some
non-vacuous check fails.
"""

from __future__ import annotations

import csv
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .adjoint import adjoint_for_source, decay_certificate
from .domain import SpatialGrid, TimeGrid, control_norm, spacetime_inner, spacetime_norm_l2
from .errors import DegenerateCone
from .objective import (
    cost,
    derivative_bound_probe,
    directional_derivative,
    directional_derivative_linearized,
    gradient,
    second_derivative,
)
from .optimizer import (
    CriticalCone,
    OptimizeResult,
    OptimizerConfig,
    project,
    projected_gradient_solve,
    second_order_report,
)
from .sensitivity import linearized_source, solve_linearized
from .state import (
    WaveProblem,
    lipschitz_probe,
    repr_float,
    solve_forward,
    verify_accel_estimate,
    verify_energy_estimate,
)


def smooth_random_field(
    grid: SpatialGrid, time: TimeGrid, rng: np.random.Generator, modes: int = 3, scale: float = 1.0
) -> np.ndarray:
    """Random trigonometric field with ``max |w| <= scale``.

    Built from a handful of space and time modes, so the same generator
    state gives the same continuous function on every mesh.
    """
    coef = rng.uniform(-1.0, 1.0, size=(modes, modes) + (modes,) * (grid.dimension - 1))
    coef *= scale / np.abs(coef).sum()
    t = time.nodes[:, None] / time.horizon
    coords = grid.coordinates()
    out = np.zeros((time.steps + 1, grid.size))
    for idx in np.ndindex(coef.shape):
        j, ks = idx[0], idx[1:]
        shape = np.ones(grid.size)
        for k, x, L in zip(ks, coords, grid.extent):
            shape = shape * np.sin((k + 1) * np.pi * x / L)
        out += coef[idx] * np.cos(j * np.pi * t) * shape[None, :]
    return out


def random_admissible_control(p: WaveProblem, rng: np.random.Generator) -> np.ndarray:
    """Smooth field mapped into ``[α, β]``."""
    w = smooth_random_field(p.grid, p.time, rng)
    return p.alpha + 0.5 * (w + 1.0) * (p.beta - p.alpha)


def fd_gradient_error(p: WaveProblem, h: np.ndarray, eps: float = 1e-4, method: str = "discrete") -> float:
    """``|central FD - <g, h>| / max(1, |<g, h>|)``."""
    d = directional_derivative(p, h, gradient(p, method=method))
    fd = (cost(p.with_control(p.u + eps * h)) - cost(p.with_control(p.u - eps * h))) / (2 * eps)
    return abs(fd - d) / max(1.0, abs(d))


def fd_hessian_error(p: WaveProblem, h: np.ndarray, eps: float = 1e-3) -> float:
    """Relative gap between the second difference of ``J`` and ``J''(u)[h, h]``."""
    hess = second_derivative(p, h, h)
    fd = (cost(p.with_control(p.u + eps * h)) - 2 * cost(p) + cost(p.with_control(p.u - eps * h))) / eps**2
    return abs(fd - hess) / max(abs(hess), 1e-300)


def duality_error(p: WaveProblem, h: np.ndarray, w: np.ndarray) -> float:
    """Relative gap in ``<S'(u)h, w>_Q = <h ȳ, φ_w>_Q``."""
    tr = solve_forward(p)
    z = solve_linearized(p, tr, h).z
    lhs = spacetime_inner(z, w, p.time, p.grid)
    rhs = spacetime_inner(linearized_source(tr, h), adjoint_for_source(p, w).phi, p.time, p.grid)
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def variational_inequality_slack(
    p: WaveProblem, result: OptimizeResult, rng: np.random.Generator, samples: int = 100
) -> float:
    """``min_w <g, w - ū>_Q`` over random feasible ``w`` (should be ``>= -δ``)."""
    g = result.gradient.g
    worst = np.inf
    for _ in range(samples):
        w = p.alpha + rng.uniform(size=p.shape) * (p.beta - p.alpha)
        worst = min(worst, spacetime_inner(g, w - result.u, p.time, p.grid))
    return float(worst)


def kkt_sign_violation(p: WaveProblem, result: OptimizeResult, eps_act: float) -> tuple[float, float]:
    """Largest violation of the pointwise sign pattern and the allowed level.

    On lower-active nodes ``g >= -ε``, on upper-active nodes ``g <= ε`` and on
    free nodes ``|g| <= ε``.  ``ε`` converts the L2 residual bound into a
    pointwise one through the smallest quadrature weight.
    """
    g = result.gradient.g
    lower, upper = result.active_lower, result.active_upper
    free = ~(lower | upper)
    weight = p.time.weights().min() * p.grid.cell_volume
    eps = p.gamma * max(result.report.kkt_residual, eps_act) / np.sqrt(weight)
    viol = 0.0
    if lower.any():
        viol = max(viol, float(np.max(-g[lower])))
    if upper.any():
        viol = max(viol, float(np.max(g[upper])))
    if free.any():
        viol = max(viol, float(np.max(np.abs(g[free]))))
    return viol, eps


def quadratic_growth_margin(
    p: WaveProblem,
    u_bar: np.ndarray,
    rng: np.random.Generator,
    samples: int = 50,
    radius: float = 0.1,
    delta: float | None = None,
) -> float:
    """``min (J(u) - J(ū)) / ||u - ū||²_Q - δ`` over feasible ``u`` near ``ū``.

    Perturbations are smooth random fields with ``U``-norm at most
    ``radius``, projected onto the box.
    """
    delta = p.gamma / 4 if delta is None else delta
    j_bar = cost(p.with_control(u_bar))
    worst = np.inf
    for _ in range(samples):
        h = smooth_random_field(p.grid, p.time, rng)
        h *= rng.uniform(0.05, 1.0) * radius / control_norm(h, p.time)
        u = project(u_bar + h, p.alpha, p.beta)
        d2 = spacetime_norm_l2(u - u_bar, p.time, p.grid) ** 2
        if d2 == 0.0:
            continue
        worst = min(worst, (cost(p.with_control(u)) - j_bar) / d2 - delta)
    return float(worst)


@dataclass
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "vacuous"
    value: float
    tolerance: float
    runtime: float = 0.0
    note: str = ""


@dataclass
class VerifySuiteReport:
    checks: list[CheckResult] = field(default_factory=list)
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_text(self) -> str:
        lines = [f"seed={self.seed}", f"status={self.status}"]
        for c in self.checks:
            lines.append(
                f"{c.name}: status={c.status} value={repr_float(c.value)} "
                f"tolerance={repr_float(c.tolerance)} runtime={c.runtime:.3f}"
                + (f" note={c.note}" if c.note else "")
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "status", "value", "tolerance", "runtime", "seed"])
            for c in self.checks:
                w.writerow([c.name, c.status, repr_float(c.value), repr_float(c.tolerance),
                            f"{c.runtime:.3f}", self.seed])
        return path


def _le(name, value, tol, note=""):
    return CheckResult(name, "pass" if value <= tol else "fail", float(value), tol, note=note)


def _ge(name, value, tol, note=""):
    return CheckResult(name, "pass" if value >= tol else "fail", float(value), tol, note=note)


def run_verify_suite(
    problem_at: Callable[[int], WaveProblem],
    cfg: OptimizerConfig | None = None,
    seed: int = 0,
    horizon_factor: int = 2,
    tail_tol: float = 1e-6,
) -> VerifySuiteReport:
    """Run every check on the problem ``problem_at(1)``.

    ``problem_at(k)`` returns the same scenario on the horizon multiplied by
    ``k``; it is needed for the adjoint decay certificate.
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    p = problem_at(1)
    rng = np.random.default_rng(seed)
    pairs = [
        (smooth_random_field(p.grid, p.time, rng), smooth_random_field(p.grid, p.time, rng))
        for _ in range(5)
    ]
    h_fd = smooth_random_field(p.grid, p.time, rng)
    lip_pairs = [
        (random_admissible_control(p, rng), random_admissible_control(p, rng)) for _ in range(5)
    ]

    def energy():
        tr = solve_forward(p)
        r = verify_energy_estimate(p, tr)
        return _le("energy_estimate", r.lhs / r.rhs if r.rhs > 0 else 0.0, 1.0 + r.tol)

    def accel():
        tr = solve_forward(p)
        r = verify_accel_estimate(p, tr)
        return _le("accel_estimate", r.lhs / r.rhs if r.rhs > 0 else 0.0, 1.0 + r.tol)

    def duality():
        return _le("adjoint_duality", max(duality_error(p, h, w) for h, w in pairs), 1e-9)

    def representation():
        worst = 0.0
        for h, _ in pairs:
            a = directional_derivative(p, h)
            b = directional_derivative_linearized(p, h)
            scale = max(abs(a), abs(b))
            worst = max(worst, abs(a - b) / scale if scale > 0 else 0.0)
        return _le("gradient_representation", worst, 1e-8)

    def grad_fd():
        return _le("gradient_fd", fd_gradient_error(p, h_fd), 5e-3)

    def hess_fd():
        return _le("hessian_fd", fd_hessian_error(p, h_fd), 5e-3)

    def hess_sym():
        h1, h2 = pairs[0]
        a, b = second_derivative(p, h1, h2), second_derivative(p, h2, h1)
        scale = max(abs(a), abs(b))
        return _le("hessian_symmetry", abs(a - b) / scale if scale > 0 else 0.0, 1e-12)

    def decay():
        c = decay_certificate(problem_at, horizon_factor)
        return _le("adjoint_decay_tail", c.tail, tail_tol,
                   note=f"max_difference={c.max_difference:.3e}")

    def lipschitz():
        ratios = [lipschitz_probe(p.with_control(a), p.with_control(b)) for a, b in lip_pairs]
        worst = max(ratios)
        return CheckResult("lipschitz_ratio", "pass" if np.isfinite(worst) else "fail",
                           worst, float("inf"))

    def derivative_bounds():
        (a, b), (h1, h2) = lip_pairs[0], pairs[0]
        ratios = derivative_bound_probe(p, a, b, h1, h2)
        worst = max(ratios)
        return CheckResult("derivative_bounds", "pass" if np.isfinite(worst) else "fail",
                           worst, float("inf"), note=" ".join(f"{r:.3e}" for r in ratios))

    independent = [energy, accel, duality, representation, grad_fd, hess_fd, hess_sym,
                   decay, lipschitz, derivative_bounds]

    def timed(fn):
        t0 = _time.perf_counter()
        res = fn()
        res.runtime = _time.perf_counter() - t0
        return res

    with ThreadPoolExecutor() as pool:
        results = list(pool.map(timed, independent))

    # optimality checks depend on the optimizer run
    t0 = _time.perf_counter()
    result = projected_gradient_solve(p, cfg)
    opt_time = _time.perf_counter() - t0
    pu = p.with_control(result.u)
    results.append(CheckResult("optimizer_converged", "pass" if result.converged else "fail",
                               result.report.kkt_residual, cfg.kkt_tol, opt_time,
                               note=f"iterations={result.iterations}"))
    results.append(timed(lambda: _le("kkt_projection_residual", result.report.kkt_residual, 1e-6)))
    monotone = all(b.J <= a.J for a, b in zip(result.history, result.history[1:]))
    results.append(CheckResult("armijo_monotone", "pass" if monotone else "fail",
                               float(monotone), 1.0))

    def vi():
        gnorm = spacetime_norm_l2(result.gradient.g, p.time, p.grid)
        slack = variational_inequality_slack(pu, result, np.random.default_rng(seed + 1))
        return _ge("variational_inequality", slack, -cfg.kkt_tol * (gnorm + 1.0))

    def signs():
        viol, eps = kkt_sign_violation(pu, result, cfg.active_set_eps)
        return _le("kkt_sign_pattern", viol, eps)

    def second_order():
        rep = second_order_report(pu, result, cfg, seed=seed)
        if rep.verdict == "vacuous":
            return CheckResult("second_order_necessary", "vacuous", float("nan"), -rep.tol,
                               note="critical cone is trivial")
        return _ge("second_order_necessary", rep.min_quotient, -rep.tol,
                   note=f"verdict={rep.verdict}")

    def cone_sample():
        try:
            d = CriticalCone(pu, result, cfg.active_set_eps).sample(seed)
        except DegenerateCone:
            return CheckResult("critical_direction", "vacuous", float("nan"), cfg.active_set_eps)
        status = "pass" if d.satisfies_sign_conditions else "fail"
        return CheckResult("critical_direction", status, d.gradient_pairing, cfg.active_set_eps)

    def growth():
        margin = quadratic_growth_margin(p, result.u, np.random.default_rng(seed + 2))
        return _ge("quadratic_growth", margin, 0.0, note="delta=gamma/4, radius=0.1")

    results.extend(timed(fn) for fn in (vi, signs, cone_sample, second_order, growth))
    return VerifySuiteReport(sorted(results, key=lambda c: c.name), seed)
