"""Free decay of the first sine mode and the second-order convergence of the scheme."""

# %%
import numpy as np

from bilinear_wave import load_scenario, solve_forward, verify_energy_estimate
from bilinear_wave.domain import slice_norms_l2
from bilinear_wave.state import energies

scenario = load_scenario("demos/scenarios/decaying_mode.yaml")

# %% the closed form for y0 = sin(πx), y1 = 0 with no control and no forcing
omega = np.sqrt(np.pi**2 - 0.25)


def exact(problem):
    t = problem.time.nodes[:, None]
    x = problem.grid.coordinates()[0][None, :]
    return np.exp(-t / 2) * (np.cos(omega * t) + np.sin(omega * t) / (2 * omega)) * np.sin(np.pi * x)


# %% error on three meshes; each refinement halves Δx and Δt
errors = []
for level in range(3):
    p = scenario.refined(level).problem()
    y = solve_forward(p).y
    errors.append(slice_norms_l2(y - exact(p), p.grid).max())
    print(f"n={p.grid.n[0]:4d} m={p.time.steps:5d}  max_t ||y - y_exact|| = {errors[-1]:.3e}")
print("ratios:", np.round(np.array(errors[:-1]) / errors[1:], 3))

# %% the damping makes the discrete energy non-increasing
p = scenario.problem()
tr = solve_forward(p)
e = energies(tr)
print(f"E(0) = {e[0]:.4f}, E(T) = {e[-1]:.3e}, max increase after the first step = {np.diff(e[1:]).max():.1e}")
print("energy estimate satisfied:", verify_energy_estimate(p, tr).satisfied)
