"""
Particle bias in a linear mean-field model
==========================================

The generalized Ornstein-Uhlenbeck model

    dX = (gamma X + beta E[X]) dt + sqrt(v2) dW

is linear, so the Euler particle scheme has closed-form moments.  That makes
it the calibration case: the first moment carries no particle bias at all,
and the second moment carries a bias exactly proportional to 1/N.
"""

import numpy as np

from meanfield_mc import oracles
from meanfield_mc.experiments import ExperimentConfig, render_text, run_experiment

# %%
# Exact reference values
# ----------------------
# With 50 steps on [0, 1] the discretized first moment is (1 + 0.3 h)^50
# for every N.  The second moment depends on N through a single 1/N term.

h = 1 / 50
print("E[X_T]      ", oracles.ou_discretized_first_moment(50, h, -0.5, 0.8, 1.0))
for n in (20, 40, 80, 160, 320):
    m2 = oracles.ou_discretized_second_moment(50, h, n, -0.5, 0.8, 0.5, 1.0)
    bias = oracles.ou_particle_bias_second_moment(50, h, n, -0.5, 0.8, 0.5)
    print(f"E[X_T^2] N={n:<4d}{m2:.6f}   1/N bias {bias:.3e}")

# %%
# Monte Carlo over a doubling schedule
# ------------------------------------
# 20 000 runs keep this demo under a minute.  Both tables come from one pass:
# every run draws a 2 * N_max block once, and each N reads a prefix of it.

report = run_experiment(ExperimentConfig(model="ou", runs=20_000, iterations=4, mode="both"))
for name, rows in report.tables.items():
    print(render_text(rows, title=f"psi = {name}"))

# %%
# Reading the output
# ------------------
# For psi(x) = x the antithetic variance sits at rounding level (~1e-31):
# the 2N-particle mean is exactly the average of the two N-particle means,
# because the dynamics are linear.  For psi(x) = x^2 it falls by about 4 per
# doubling, the O(1/N^2) rate of a well-coupled estimator.

x2 = report.tables["x2"]
print("variance ratios", [None if r.antithetic_ratio is None else round(r.antithetic_ratio, 2) for r in x2])
print("normals drawn  ", f"{report.metadata['normals_drawn']:.3e}")
