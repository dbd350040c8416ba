"""Command-line entry point.

::

    bilinear-wave solve --scenario s.yaml [--out DIR] [--seed N] [--refine K]
    bilinear-wave adjoint ...
    bilinear-wave optimize ...
    bilinear-wave verify ...
    bilinear-wave sweep-horizon ... [--horizon-factor K]

Exit codes: 0 success, 1 validation error, 2 solver failure, 3 failed
verification.  Errors are also reported as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .adjoint import decay_certificate, solve_adjoint
from .checks import run_verify_suite
from .errors import DegenerateCone, LineSearchStalled, SolverError
from .objective import cost_parts
from .optimizer import (
    kkt_residual,
    projected_gradient_solve,
    second_order_report,
    write_history_csv,
)
from .scenario import Scenario, load_scenario
from .state import export_csv, repr_float, solve_forward, verify_energy_estimate

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("solve", "adjoint", "optimize", "verify", "sweep-horizon")

log = logging.getLogger(__name__)


def _kv(path: Path, items: dict) -> Path:
    lines = []
    for k, v in items.items():
        lines.append(f"{k}={repr_float(v) if isinstance(v, float) else v}")
    path.write_text("\n".join(lines) + "\n")
    return path


def cmd_solve(s: Scenario, out: Path, args) -> int:
    p = s.problem()
    tr = solve_forward(p)
    export_csv(out / "state.csv", p.grid, p.time, tr.y, tr.v, s.stride)
    rep = verify_energy_estimate(p, tr)
    _kv(out / "energy_report.txt", {
        "seed": s.seed, "lhs": rep.lhs, "constant": rep.constant, "rhs": rep.rhs,
        "tol": rep.tol, "satisfied": rep.satisfied,
    })
    print(f"state written to {out / 'state.csv'}; energy estimate satisfied={rep.satisfied}")
    return EXIT_OK


def cmd_adjoint(s: Scenario, out: Path, args) -> int:
    p = s.problem()
    adj = solve_adjoint(p, solve_forward(p))
    export_csv(out / "adjoint.csv", p.grid, p.time, adj.phi, adj.dphi, s.stride, ("phi", "dphi"))
    cert = decay_certificate(s.problem, args.horizon_factor)
    _kv(out / "decay_certificate.txt", {"seed": s.seed, **asdict(cert)})
    print(f"adjoint written to {out / 'adjoint.csv'}; tail={cert.tail:.3e}")
    return EXIT_OK


def cmd_optimize(s: Scenario, out: Path, args) -> int:
    p = s.problem()
    res = projected_gradient_solve(p, s.optimizer)
    write_history_csv(out / "iterates.csv", res)
    pu = p.with_control(res.u)
    export_csv(out / "control.csv", p.grid, p.time, res.u, res.gradient.g, s.stride, ("u", "g"))
    _kv(out / "result.txt", {
        "seed": s.seed, "converged": res.converged, "iterations": res.iterations,
        **asdict(res.report),
        "active_lower_fraction": float(res.active_lower.mean()),
        "active_upper_fraction": float(res.active_upper.mean()),
    })
    so = second_order_report(pu, res, s.optimizer, seed=s.seed)
    _kv(out / "second_order.txt", {
        "seed": s.seed, "min_quotient": so.min_quotient, "direction_id": so.direction_id,
        "necessary": so.necessary, "sufficient": so.sufficient, "verdict": so.verdict,
        "tol": so.tol, "samples": len(so.quotients),
    })
    print(f"J={res.report.J:.10g} kkt={res.report.kkt_residual:.3e} "
          f"iterations={res.iterations} second-order={so.verdict}")
    return EXIT_OK if res.converged else EXIT_SOLVER


def cmd_verify(s: Scenario, out: Path, args) -> int:
    rep = run_verify_suite(s.problem, s.optimizer, s.seed, args.horizon_factor)
    (out / "verify_report.txt").write_text(rep.to_text())
    rep.write_csv(out / "verify_report.csv")
    sys.stdout.write(rep.to_text())
    return EXIT_OK if rep.passed else EXIT_VERIFY


def sweep_horizon(s: Scenario, factor: int = 2, levels: int = 3) -> list[dict]:
    """Rows ``(T_h, J, kkt_residual, adjoint_tail, J_difference)``.

    Horizons are ``T, kT, k²T`` for ``k = factor``, all with the scenario's
    step size.  ``J`` and the KKT residual are taken at the scenario control;
    the tail is read from the adjoint on the ``k``-times longer horizon and
    ``J_difference = |J(k T_h) - J(T_h)|``.
    """
    if factor < 2:
        raise ValueError("horizon factor must be at least 2")
    js = {}

    def j_at(mult):
        if mult not in js:
            p = s.problem(mult)
            js[mult] = cost_parts(p, solve_forward(p)).J
        return js[mult]

    rows = []
    for i in range(levels):
        base = factor**i
        p = s.problem(base)
        cert = decay_certificate(lambda k, b=base: s.problem(b * k), factor)
        rows.append({
            "T_h": p.time.horizon,
            "J": j_at(base),
            "kkt_residual": kkt_residual(p),
            "adjoint_tail": cert.tail,
            "J_difference": abs(j_at(base * factor) - j_at(base)),
        })
    return rows


def cmd_sweep(s: Scenario, out: Path, args) -> int:
    rows = sweep_horizon(s, args.horizon_factor)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*rows[0].keys(), "seed"])
        for r in rows:
            w.writerow([*(repr_float(v) for v in r.values()), s.seed])
    for r in rows:
        print(" ".join(f"{k}={v:.6e}" for k, v in r.items()))
    return EXIT_OK


HANDLERS = {
    "solve": cmd_solve,
    "adjoint": cmd_adjoint,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "sweep-horizon": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilinear-wave", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--refine", type=int, default=0, help="halve Δx and Δt this many times")
        sp.add_argument("--horizon-factor", type=int, default=2)
    return parser


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)
    return code


def run_subcommand(name: str, scenario: Scenario, args: argparse.Namespace) -> int:
    """Dispatch one subcommand; returns the exit status."""
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.refine < 0:
        raise ValueError("--refine must be non-negative")
    if args.horizon_factor < 2:
        raise ValueError("--horizon-factor must be at least 2")
    scenario = scenario.refined(args.refine)
    out = Path(args.out if args.out is not None else scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[name](scenario, out, args)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario)
        return run_subcommand(args.command, scenario, args)
    except (SolverError, LineSearchStalled, DegenerateCone) as exc:
        return _fail(EXIT_SOLVER, "solver", exc)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_VALIDATION, "validation", exc)


if __name__ == "__main__":
    sys.exit(main())
