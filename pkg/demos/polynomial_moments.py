"""
Polynomial drift: references from a moment recursion
====================================================

For

    dX = (gamma X + E[X] - X E[X^2]) dt + X dW,   X_0 = 1,

the Euler scheme of the limit equation closes on its first two moments, so a
two-line recursion gives the time-discretized references.  The particle
estimates then converge to them at rate 1/N.
"""

from meanfield_mc import oracles
from meanfield_mc.experiments import ExperimentConfig, render_text, run_experiment

m1, m2 = oracles.polynomial_moment_recursion(50, 1 / 50, 2.0, 1.0)
print(f"references: E[X_T] = {m1:.6f}, E[X_T^2] = {m2:.6f}")

# %%
# A short sweep.  At this run count the precision is comparable to the bias
# at the larger N, so the ratio row is noisy there; the acceptance suite uses
# 500 000 runs.

report = run_experiment(ExperimentConfig(model="polynomial", runs=50_000, iterations=4))
for name, rows in report.tables.items():
    print(render_text(rows, title=f"psi = {name}"))
