"""
Plane rotator: a deterministic sanity check
===========================================

Without noise and with every oscillator at the same angle, the interaction
term K sin(theta - x) vanishes and each oscillator follows

    dx/dt = -sin x,   tan(x_t / 2) = tan(x_0 / 2) exp(-t).

The Euler particle scheme should then reduce to scalar Euler on this ODE,
with first-order convergence in the step.
"""

import numpy as np

from meanfield_mc import oracles
from meanfield_mc.engine import integrate
from meanfield_mc.models import plane_rotator
from meanfield_mc.paths import make_time_grid

model = plane_rotator(kbt=0.0, init_var=0.0)
x0 = model["init_mean"]

errors = []
for steps in (50, 500, 5000):
    grid = make_time_grid(1.0, steps)
    _, path, _ = integrate(model, grid, np.zeros((1, 16)), np.zeros((1, 16, steps)), record_means=True)
    err = np.max(np.abs(path[0] - oracles.rotator_zero_noise(grid.times(), x0)))
    errors.append(err)
    print(f"K={steps:<5d} max |Euler - exact| = {err:.3e}")

# %%
# Successive errors shrink by the step ratio (10), as expected of Euler.

print("ratios", [round(float(a / b), 3) for a, b in zip(errors, errors[1:])])

# %%
# With noise switched back on there is no closed form; the bias is measured
# against an external Monte Carlo value instead:
#
#     meanfield-mc bias --model rotator --runs 2000000 --iterations 1
