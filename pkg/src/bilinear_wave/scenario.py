"""Scenario documents: YAML files describing a problem through analytic fields.

Every field is given by a catalog entry, e.g.::

    grid: {dimension: 1, n: 63, extent: 1.0}
    time: {horizon: 8.0, steps: 512}
    init:
      y0: {kind: sine-mode, k: 1}
      yd: {kind: zero}
    bounds:
      alpha: {kind: constant, value: -1.0}
      beta: {kind: constant, value: 1.0}
    cost: {gamma: 1.0}

Catalog kinds: ``zero``, ``constant`` (value), ``sine-mode`` (k, amplitude),
``gaussian-bump`` (center, width, amplitude), ``decaying-exp`` (rate, k,
amplitude) and, for ``init.yd`` only, ``uncontrolled-state`` (the state of
the scenario with ``u = 0``).  A bare number is shorthand for a constant.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .domain import SpatialGrid, TimeGrid
from .errors import ScenarioError
from .optimizer import OptimizerConfig
from .state import WaveProblem, march

KINDS = {
    "zero": {},
    "constant": {"value": 0.0},
    "sine-mode": {"k": 1, "amplitude": 1.0},
    "gaussian-bump": {"center": 0.5, "width": 0.1, "amplitude": 1.0},
    "decaying-exp": {"rate": 1.0, "k": 1, "amplitude": 1.0},
    "uncontrolled-state": {},
}


@dataclass
class Initializer:
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, spec: Any, where: str) -> Initializer:
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return cls("constant", {"value": float(spec)})
        if isinstance(spec, str):
            try:
                return cls("constant", {"value": float(spec)})
            except ValueError:
                spec = {"kind": spec}
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ScenarioError(f"{where}: expected a number or a mapping with 'kind'")
        kind = spec["kind"]
        if kind not in KINDS:
            raise ScenarioError(f"{where}: unknown initializer {kind!r}")
        if kind == "uncontrolled-state" and where != "init.yd":
            raise ScenarioError(f"{where}: 'uncontrolled-state' is only allowed for init.yd")
        extra = set(spec) - {"kind"} - set(KINDS[kind])
        if extra:
            raise ScenarioError(f"{where}: unknown keys {sorted(extra)} for {kind!r}")
        params = dict(KINDS[kind])
        params.update({k: v for k, v in spec.items() if k != "kind"})
        for key in ("value", "amplitude", "width", "rate"):
            if key in params:
                params[key] = _number(params[key], f"{where}.{key}")
        if "k" in params:
            params["k"] = _int_or_list(params["k"], f"{where}.k")
        if "center" in params:
            params["center"] = _float_or_list(params["center"], f"{where}.center")
        if kind == "gaussian-bump" and not params["width"] > 0:
            raise ScenarioError(f"{where}: width must be positive")
        return cls(kind, params)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def constant_value(self) -> float | None:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.params["value"]
        return None

    def spatial(self, grid: SpatialGrid) -> np.ndarray:
        """Values at ``t = 0``."""
        return self.evaluate(grid, np.zeros(1))[0]

    def evaluate(self, grid: SpatialGrid, t: np.ndarray) -> np.ndarray:
        """Values on the space-time grid, shape ``(len(t), grid.size)``."""
        coords = grid.coordinates()
        t = np.asarray(t, dtype=float)[:, None]
        p = self.params
        if self.kind == "zero":
            return np.zeros((t.shape[0], grid.size))
        if self.kind == "constant":
            return np.full((t.shape[0], grid.size), p["value"])
        if self.kind in ("sine-mode", "decaying-exp"):
            ks = _per_axis(p["k"], grid.dimension)
            shape = np.ones(grid.size)
            for k, x, L in zip(ks, coords, grid.extent):
                shape = shape * np.sin(k * np.pi * x / L)
            decay = np.exp(-p["rate"] * t) if self.kind == "decaying-exp" else np.ones_like(t)
            return p["amplitude"] * decay * shape[None, :]
        if self.kind == "gaussian-bump":
            centers = _per_axis(p["center"], grid.dimension)
            r2 = sum((x - c) ** 2 for x, c in zip(coords, centers))
            bump = p["amplitude"] * np.exp(-r2 / (2.0 * p["width"] ** 2))
            return np.broadcast_to(bump, (t.shape[0], grid.size)).copy()
        raise ScenarioError(f"{self.kind!r} cannot be evaluated directly")


def _number(v, where):
    # PyYAML reads exponent literals without a dot (1e-6) as strings
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            pass
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _int_or_list(v, where):
    if isinstance(v, list):
        return [_int(x, where) for x in v]
    return _int(v, where)


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{where}: expected an integer, got {v!r}")
    return v


def _float_or_list(v, where):
    if isinstance(v, list):
        return [_number(x, where) for x in v]
    return _number(v, where)


def _per_axis(v, dim):
    vals = list(v) if isinstance(v, (list, tuple)) else [v] * dim
    if len(vals) != dim:
        raise ScenarioError(f"expected {dim} per-axis values, got {vals}")
    return vals


def _zero():
    return Initializer("zero", {})


def _const(c):
    return Initializer("constant", {"value": c})


@dataclass
class Scenario:
    dimension: int = 1
    n: tuple[int, ...] = (63,)
    extent: tuple[float, ...] = (1.0,)
    horizon: float = 8.0
    steps: int = 512
    y0: Initializer = field(default_factory=_zero)
    y1: Initializer = field(default_factory=_zero)
    f: Initializer = field(default_factory=_zero)
    yd: Initializer = field(default_factory=_zero)
    alpha: Initializer = field(default_factory=lambda: _const(-1.0))
    beta: Initializer = field(default_factory=lambda: _const(1.0))
    u0: Initializer = field(default_factory=_zero)
    gamma: float = 1.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    output_dir: str = "out"
    stride: int = 1
    seed: int = 0

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.n, self.extent)

    @property
    def time(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    def refined(self, times: int) -> Scenario:
        if times <= 0:
            return self
        g, tg = self.grid.refined(times), self.time.refined(times)
        return replace(self, n=g.n, steps=tg.steps)

    def problem(self, horizon_factor: int = 1) -> WaveProblem:
        """Evaluate every initializer on the grids (horizon scaled by the factor)."""
        g = self.grid
        tg = self.time.extended(horizon_factor) if horizon_factor != 1 else self.time
        t = tg.nodes
        y0, y1 = self.y0.spatial(g), self.y1.spatial(g)
        f = self.f.evaluate(g, t)
        u = self.u0.evaluate(g, t)
        if self.yd.kind == "uncontrolled-state":
            yd = march(g, tg, np.zeros_like(f), f, y0, y1)
        else:
            yd = self.yd.evaluate(g, t)
        try:
            return WaveProblem(g, tg, y0, y1, f, u, self.alpha.evaluate(g, t),
                               self.beta.evaluate(g, t), self.gamma, yd)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc


_SECTIONS = {
    "grid": {"dimension", "n", "extent"},
    "time": {"horizon", "steps"},
    "init": {"y0", "y1", "f", "yd"},
    "bounds": {"alpha", "beta"},
    "control": {"u0"},
    "cost": {"gamma"},
    "optimizer": {f.name for f in fields(OptimizerConfig)},
    "output": {"dir", "stride"},
}


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ScenarioError(f"{name}: expected a mapping")
    extra = set(sec) - _SECTIONS[name]
    if extra:
        raise ScenarioError(f"{name}: unknown keys {sorted(extra)}")
    return sec


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    extra = set(doc) - set(_SECTIONS) - {"seed"}
    if extra:
        raise ScenarioError(f"unknown top-level keys {sorted(extra)}")
    s = Scenario()
    grid = _section(doc, "grid")
    dim = grid.get("dimension", 1)
    if isinstance(dim, str):
        dim = {"1d": 1, "2d": 2}.get(dim.lower(), dim)
    if dim not in (1, 2):
        raise ScenarioError(f"grid.dimension must be 1 or 2, got {dim!r}")
    n = grid.get("n", 63)
    extent = grid.get("extent", 1.0)
    n = tuple(_per_axis(_int_or_list(n, "grid.n"), dim))
    extent = tuple(_per_axis(_float_or_list(extent, "grid.extent"), dim))
    if min(n) < 1 or min(extent) <= 0:
        raise ScenarioError("grid.n must be >= 1 and grid.extent > 0")

    tm = _section(doc, "time")
    horizon = _number(tm.get("horizon", s.horizon), "time.horizon")
    steps = _int(tm.get("steps", s.steps), "time.steps")
    if horizon <= 0 or steps < 2:
        raise ScenarioError("time.horizon must be > 0 and time.steps >= 2")

    init, bounds, control = _section(doc, "init"), _section(doc, "bounds"), _section(doc, "control")
    inits = {}
    for sec_name, sec, keys in (("init", init, ("y0", "y1", "f", "yd")),
                                ("bounds", bounds, ("alpha", "beta")),
                                ("control", control, ("u0",))):
        for key in keys:
            if key in sec:
                inits[key] = Initializer.parse(sec[key], f"{sec_name}.{key}")
            else:
                inits[key] = getattr(s, key)
    a, b = inits["alpha"].constant_value(), inits["beta"].constant_value()
    if a is not None and b is not None and a > b:
        raise ScenarioError("bounds inverted: alpha > beta")

    gamma = _number(_section(doc, "cost").get("gamma", s.gamma), "cost.gamma")
    if gamma <= 0:
        raise ScenarioError("cost.gamma must be positive")

    opt = _section(doc, "optimizer")
    defaults = asdict(OptimizerConfig())
    opt = {
        k: _int(v, f"optimizer.{k}") if isinstance(defaults[k], int)
        else _number(v, f"optimizer.{k}")
        for k, v in opt.items()
    }
    try:
        optimizer = OptimizerConfig(**opt)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"optimizer: {exc}") from exc

    out = _section(doc, "output")
    seed = doc.get("seed", 0)
    return Scenario(
        dimension=dim, n=n, extent=extent, horizon=horizon, steps=steps,
        gamma=gamma, optimizer=optimizer,
        output_dir=str(out.get("dir", s.output_dir)),
        stride=_int(out.get("stride", s.stride), "output.stride"),
        seed=_int(seed, "seed"),
        **inits,
    )


def parse_scenario(text: str) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc
    return scenario_from_dict(doc if doc is not None else {})


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "grid": {"dimension": s.dimension, "n": list(s.n), "extent": list(s.extent)},
        "time": {"horizon": s.horizon, "steps": s.steps},
        "init": {k: getattr(s, k).to_dict() for k in ("y0", "y1", "f", "yd")},
        "bounds": {"alpha": s.alpha.to_dict(), "beta": s.beta.to_dict()},
        "control": {"u0": s.u0.to_dict()},
        "cost": {"gamma": s.gamma},
        "optimizer": asdict(s.optimizer),
        "output": {"dir": s.output_dir, "stride": s.stride},
        "seed": s.seed,
    }


def serialize_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)
