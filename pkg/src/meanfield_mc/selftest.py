"""Fast end-to-end checks behind ``meanfield-mc selftest``."""

from __future__ import annotations

import math

import numpy as np

from . import oracles
from .engine import FIRST_MOMENT, SECOND_MOMENT, integrate, simulate_triple_batch
from .experiments import ExperimentConfig, run_experiment
from .models import generalized_ou, plane_rotator
from .paths import fill_driver_blocks, make_time_grid


def _close(a, b, tol):
    return abs(a - b) <= tol


def run_checks():
    """Yield ``(name, passed, detail)`` triples."""
    grid = make_time_grid(1.0, 50)

    m1 = oracles.ou_discretized_first_moment(50, grid.h, -0.5, 0.8, 1.0)
    yield "ou first-moment oracle", _close(round(m1, 5), 1.34865, 1e-12), f"{m1:.8f}"

    row = [oracles.ou_discretized_second_moment(50, grid.h, n, -0.5, 0.8, 0.5, 1.0) for n in (20, 40, 80, 160, 320)]
    want = [2.15552, 2.14648, 2.14195, 2.13969, 2.13856]
    yield "ou second-moment oracle", all(_close(round(a, 5), b, 1e-12) for a, b in zip(row, want)), \
        " ".join(f"{v:.5f}" for v in row)

    rec = oracles.ou_second_moment_recursion(50, grid.h, 20, -0.5, 0.8, 0.5, 1.0)[0]
    yield "ou closed form vs recursion", _close(rec, row[0], 1e-12 * row[0]), f"{rec - row[0]:.2e}"

    p1, p2 = oracles.polynomial_moment_recursion(50, grid.h, 2.0, 1.0)
    yield "polynomial oracle", round(p1, 4) == 1.3845 and round(p2, 5) == 3.13743, f"({p1:.6f}, {p2:.6f})"

    b = oracles.burgers_cole_hopf(1.0, 0.5, 0.25)
    yield "burgers oracle", b == 0.5, f"{b!r}"

    model = generalized_ou()
    init, incr = fill_driver_blocks(0, np.arange(200), grid, 80)
    t = simulate_triple_batch(model, grid, 40, init, incr, [FIRST_MOMENT, SECOND_MOMENT])
    v = float(np.var(t.antithetic_diff("x"), ddof=1))
    yield "ou antithetic linear coupling", v <= 1e-25, f"variance {v:.2e}"

    rep = run_experiment(ExperimentConfig(model="ou", runs=4000, iterations=2, observables=("x",)))
    ok = all(abs(r.difference) <= 3 * r.precision for r in rep.tables["x"])
    yield "ou bias within 3 precisions", ok, ", ".join(f"{r.difference:+.1e}/{r.precision:.1e}" for r in rep.tables["x"])

    rot = plane_rotator(kbt=0.0, init_var=0.0)
    exact = float(oracles.rotator_zero_noise(1.0, math.pi / 4))
    errs = []
    for k in (50, 500):
        x, _, _ = integrate(rot, make_time_grid(1.0, k), np.zeros((1, 4)), np.zeros((1, 4, k)))
        errs.append(float(np.max(np.abs(x - exact))))
    ratio = errs[0] / errs[1]
    yield "rotator zero-noise first order", 9.0 < ratio < 11.0, f"errors {errs[0]:.2e}, {errs[1]:.2e}"
