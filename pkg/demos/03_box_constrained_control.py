"""Projected gradient on a problem where part of the control sits on the bounds."""

# %%
import numpy as np

from bilinear_wave import load_scenario, projected_gradient_solve, second_order_report
from bilinear_wave.optimizer import CriticalCone

scenario = load_scenario("demos/scenarios/mixed_bounds.yaml")
p = scenario.problem()
result = projected_gradient_solve(p, scenario.optimizer)

# %% iteration history
for rec in result.history:
    print(f"iter {rec.iter:2d}  J={rec.J:.10f}  kkt={rec.kkt_residual:.2e}  step={rec.step:g}")

# %% where the bounds are active
lower, upper = result.active_lower, result.active_upper
print(f"on alpha: {lower.mean():.1%}  on beta: {upper.mean():.1%}  free: {(~(lower | upper)).mean():.1%}")
g = result.gradient.g
print("gradient >= 0 on the lower set:", bool(np.all(g[lower] >= -1e-8)))
print("gradient <= 0 on the upper set:", bool(np.all(g[upper] <= 1e-8)))

# %% critical cone and the sampled curvature on it
cone = CriticalCone(p.with_control(result.u), result, scenario.optimizer.active_set_eps)
print(f"strongly active nodes: {cone.strong.mean():.1%}")
rep = second_order_report(p, result, scenario.optimizer, seed=scenario.seed)
print(f"min Rayleigh quotient {rep.min_quotient:.6f} vs gamma {p.gamma}: {rep.verdict}")
