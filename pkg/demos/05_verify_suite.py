"""The full verification suite on the perfect-tracking scenario.

Here u = 0 is optimal, the adjoint vanishes and J'' reduces to
||z||² + γ||h||², so every check has a known answer.  The same suite is
available as ``bilinear-wave verify``.
"""

# %%
from bilinear_wave import load_scenario, run_verify_suite

scenario = load_scenario("demos/scenarios/perfect_tracking.yaml")
report = run_verify_suite(scenario.problem, scenario.optimizer, scenario.seed)
print(report.to_text())
