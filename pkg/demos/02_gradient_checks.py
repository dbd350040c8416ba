"""Adjoint gradient, Taylor test and Hessian on a tracking problem.

The target is produced by a known control, so the cost is not trivial at the
starting point.
"""

# %%
from dataclasses import replace

import numpy as np

from bilinear_wave import cost, directional_derivative, gradient, load_scenario, second_derivative
from bilinear_wave.checks import duality_error, smooth_random_field
from bilinear_wave.state import march

p = load_scenario("demos/scenarios/decaying_mode.yaml").problem()
t = p.time.nodes[:, None] / p.time.horizon
x = p.grid.coordinates()[0][None, :]
u_true = 0.5 * np.cos(np.pi * t) * np.sin(np.pi * x)
p = replace(p, yd=march(p.grid, p.time, u_true, p.f, p.y0, p.y1), gamma=0.1)

rng = np.random.default_rng(0)
h, w = smooth_random_field(p.grid, p.time, rng), smooth_random_field(p.grid, p.time, rng)

# %% duality between the linearized state and the adjoint
print(f"duality relative error: {duality_error(p, h, w):.2e}")

# %% Taylor test: the remainder must shrink by four when ε halves
j0, d = cost(p), directional_derivative(p, h)
prev = None
for eps in 1e-1 / 2 ** np.arange(5):
    rem = abs(cost(p.with_control(p.u + eps * h)) - j0 - eps * d)
    print(f"eps={eps:.4f}  remainder={rem:.3e}" + (f"  ratio={prev / rem:.2f}" if prev else ""))
    prev = rem

# %% the continuous adjoint (reversed forward kernel) only agrees up to discretization error
for method in ("discrete", "continuous"):
    dm = directional_derivative(p, h, gradient(p, method=method))
    eps = 1e-4
    fd = (cost(p.with_control(p.u + eps * h)) - cost(p.with_control(p.u - eps * h))) / (2 * eps)
    print(f"{method:10s} adjoint: <g,h> = {dm:.12f}, central FD = {fd:.12f}")

# %% second derivative against a second difference
eps = 1e-3
fd2 = (cost(p.with_control(p.u + eps * h)) - 2 * j0 + cost(p.with_control(p.u - eps * h))) / eps**2
print(f"J''[h,h] = {second_derivative(p, h, h):.8f}, second difference = {fd2:.8f}")
