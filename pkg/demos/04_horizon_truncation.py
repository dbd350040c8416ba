"""How long a horizon is long enough.

The cost settles quickly, but the adjoint is driven resonantly by the state
and decays only like t e^{-t/2}.
"""

# %%
from dataclasses import replace

from bilinear_wave import load_scenario
from bilinear_wave.cli import sweep_horizon

scenario = load_scenario("demos/scenarios/decaying_mode.yaml")
rows = sweep_horizon(scenario, factor=2)
print(f"{'T_h':>6} {'J':>18} {'|J(2T)-J(T)|':>14} {'adjoint tail':>14}")
for r in rows:
    print(f"{r['T_h']:6.1f} {r['J']:18.12f} {r['J_difference']:14.3e} {r['adjoint_tail']:14.3e}")

# %% the tail needs roughly T_h = 24 to drop below 1e-6
longer = sweep_horizon(replace(scenario, horizon=12.0, steps=768), factor=2, levels=2)
for r in longer:
    print(f"T_h={r['T_h']:5.1f}  tail={r['adjoint_tail']:.3e}")
