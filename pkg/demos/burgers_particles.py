"""
Viscous Burgers through a discontinuous kernel
==============================================

Particles started at 0 drift with the empirical tail probability at their
own position:

    dX_i = F_N(X_i) dt + upsilon dW_i,   F_N(x) = #{j : X_j >= x} / N.

The limit profile P(X_t >= x) solves the viscous Burgers equation and has a
Cole-Hopf closed form.  Here a moderately large particle system is compared
with that profile across x.
"""

import numpy as np

from meanfield_mc import oracles
from meanfield_mc.engine import integrate, kernel_values
from meanfield_mc.models import viscous_burgers
from meanfield_mc.paths import fill_driver_blocks, make_time_grid

# %%
# The kernel
# ----------
# Each particle counts itself, so the values are a permutation of
# {1/N, ..., 1} whenever the states are distinct.

print(kernel_values(np.array([0.5, -0.2, 0.9])))

# %%
# One large system against the closed form
# ----------------------------------------

model = viscous_burgers(upsilon=0.25)
grid = make_time_grid(1.0, 500)
n = 4000
init, incr = fill_driver_blocks(0, [0], grid, n)
x, _, _ = integrate(model, grid, init, incr)
x = np.sort(x[0])

print(f"{'x':>6} {'particles':>10} {'Cole-Hopf':>10}")
for c in np.linspace(-0.25, 1.25, 7):
    empirical = np.mean(x >= c)
    print(f"{c:6.2f} {empirical:10.4f} {oracles.burgers_cole_hopf(1.0, c, 0.25):10.4f}")

# %%
# The median of the limit law sits at x = 1/2 exactly; the particle system
# lands close to it, and the gap is the O(1/N + h) bias measured by the
# ``bias`` subcommand with ``--model burgers``.

print("closed form at 1/2:", oracles.burgers_cole_hopf(1.0, 0.5, 0.25))
print("particles at 1/2:  ", np.mean(x >= 0.5))
