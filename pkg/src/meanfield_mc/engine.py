"""Euler-Maruyama integration of interacting particle systems.

Two routes compute the same thing:

* :func:`euler_step` / :func:`simulate_run` advance one run step by step with
  the numpy coefficient functions of :mod:`meanfield_mc.models`.  They are the
  readable reference implementation.
* :func:`integrate` and the batch helpers built on it run a compiled kernel
  over many runs at once.  The experiment driver only uses this route.

In both, the interaction is computed once per step from the pre-step states
and shared by every particle for that step, and empirical means are summed
left to right in particle order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from . import models
from .models import ModelSpec, Variant
from .paths import DriverBlock, TimeGrid

_OU, _ROTATOR, _POLYNOMIAL, _BURGERS = 0, 1, 2, 3


class DivergenceError(RuntimeError):
    """A particle state became non-finite."""

    def __init__(self, message, row=None, run_index=None, n_particles=None):
        super().__init__(message)
        self.row = row
        self.run_index = run_index
        self.n_particles = n_particles


@dataclass(frozen=True)
class Observable:
    """Test function applied to particle states at the horizon.

    ``kind`` is ``"first_moment"`` (x), ``"second_moment"`` (x**2) or
    ``"indicator_above"`` (1 if x >= threshold else 0).
    """

    kind: str
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in ("first_moment", "second_moment", "indicator_above"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == "indicator_above" and math.isnan(self.threshold):
            raise ValueError("threshold must not be NaN")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "first_moment":
            return x.copy()
        if self.kind == "second_moment":
            return x * x
        return (x >= self.threshold).astype(float)

    @property
    def name(self) -> str:
        if self.kind == "first_moment":
            return "x"
        if self.kind == "second_moment":
            return "x2"
        return f"ind{self.threshold:g}"

    @classmethod
    def parse(cls, text: str) -> "Observable":
        """Parse ``x``, ``x2`` or ``ind:<threshold>``."""
        text = text.strip()
        if text == "x":
            return FIRST_MOMENT
        if text in ("x2", "x^2"):
            return SECOND_MOMENT
        if text.startswith("ind:"):
            return indicator_above(float(text[4:]))
        raise ValueError(f"cannot parse observable {text!r} (use x, x2 or ind:<c>)")


FIRST_MOMENT = Observable("first_moment")
SECOND_MOMENT = Observable("second_moment")


def indicator_above(threshold: float) -> Observable:
    return Observable("indicator_above", float(threshold))


@dataclass(frozen=True)
class ParticleEnsemble:
    states: np.ndarray
    k: int = 0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 1 or states.shape[0] < 1:
            raise ValueError("an ensemble holds a non-empty vector of states")
        object.__setattr__(self, "states", states)

    @property
    def n(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class ObservableMeans:
    mean_big: float
    mean_a: float
    mean_b: float

    @property
    def antithetic_diff(self) -> float:
        return self.mean_big - 0.5 * (self.mean_a + self.mean_b)


@dataclass(frozen=True)
class RunOutput:
    """Horizon empirical means of one run, keyed by observable name."""

    means: dict
    mean_paths: dict | None = None

    def __getitem__(self, name):
        if isinstance(name, Observable):
            name = name.name
        return self.means[name]


# ---------------------------------------------------------------------------
# reference route


def kernel_values(states) -> np.ndarray:
    """``v_i = #{j : x_j >= x_i} / N`` by sorting; ties count inclusively."""
    x = np.asarray(states, dtype=float)
    n = x.shape[0]
    at_or_above = n - np.searchsorted(np.sort(x), x, side="left")
    return at_or_above / n


def interaction(model: ModelSpec, ensemble) -> np.ndarray:
    """Shared statistic mean (length p) or, for Burgers, per-particle kernel values (length N)."""
    x = ensemble.states if isinstance(ensemble, ParticleEnsemble) else np.asarray(ensemble, float)
    if x.shape[0] < 1:
        raise ValueError("empty ensemble")
    if model.is_kernel:
        return kernel_values(x)
    stat = models.statistic(model, x)
    return _row_sum(stat.T.copy()) / x.shape[0]


def euler_step(model: ModelSpec, grid: TimeGrid, ensemble: ParticleEnsemble, increments_row) -> ParticleEnsemble:
    if ensemble.k >= grid.steps:
        raise ValueError(f"ensemble is already at the horizon (k={ensemble.k})")
    dw = np.asarray(increments_row, dtype=float)
    if dw.shape != ensemble.states.shape:
        raise ValueError("one increment per particle is required")
    t = grid.time(ensemble.k)
    x = ensemble.states
    y = interaction(model, ensemble)
    new = x + models.drift(model, t, y, x) * grid.h + models.diffusion(model, t, y, x) * dw
    if not np.all(np.isfinite(new)):
        raise DivergenceError(f"non-finite state after step {ensemble.k + 1}")
    return ParticleEnsemble(new, ensemble.k + 1)


def _run_system(model, grid, block: DriverBlock, record: bool):
    ens = ParticleEnsemble(models.sample_initial(model, block.initial_draws), 0)
    path = [ens.states.copy()] if record else None
    for k in range(grid.steps):
        ens = euler_step(model, grid, ens, block.increments[k])
        if record:
            path.append(ens.states.copy())
    return ens.states, (np.array(path) if record else None)


def simulate_run(model: ModelSpec, grid: TimeGrid, n: int, block: DriverBlock, observables, record_path=False) -> RunOutput:
    """Advance the coupled triple for one run with the reference route.

    The big system uses all ``2n`` driver columns, subsystem A columns
    ``0..n-1`` and subsystem B columns ``n..2n-1``; each has its own
    interaction.  With ``record_path`` the empirical mean of the states at
    every grid time is kept per system.
    """
    if block.width != 2 * n or block.steps != grid.steps:
        raise ValueError(f"block must be shaped ({grid.steps}, {2 * n}), got ({block.steps}, {block.width})")
    big, path_big = _run_system(model, grid, block, record_path)
    a, path_a = _run_system(model, grid, block.columns(0, n), record_path)
    b, path_b = _run_system(model, grid, block.columns(n, 2 * n), record_path)
    means = {}
    for obs in observables:
        means[obs.name] = ObservableMeans(
            float(_row_sum(obs(big)[None])[0] / (2 * n)),
            float(_row_sum(obs(a)[None])[0] / n),
            float(_row_sum(obs(b)[None])[0] / n),
        )
    paths = None
    if record_path:
        paths = {
            "big": _row_sum(path_big) / (2 * n),
            "a": _row_sum(path_a) / n,
            "b": _row_sum(path_b) / n,
        }
    return RunOutput(means, paths)


# ---------------------------------------------------------------------------
# compiled route


def kernel_code(model: ModelSpec) -> tuple[int, np.ndarray]:
    p = model.params
    v = model.variant
    if v is Variant.GENERALIZED_OU:
        return _OU, np.array([p["gamma"], p["beta"], math.sqrt(p["v2"])])
    if v is Variant.PLANE_ROTATOR:
        return _ROTATOR, np.array([p["coupling"], math.sqrt(2.0 * p["kbt"])])
    if v is Variant.POLYNOMIAL_DRIFT:
        return _POLYNOMIAL, np.array([p["gamma"]])
    return _BURGERS, np.array([p["upsilon"]])


@numba.njit(cache=True, nogil=True)
def _row_sum(values):
    nb, n = values.shape
    out = np.empty(nb)
    for b in range(nb):
        s = 0.0
        for i in range(n):
            s += values[b, i]
        out[b] = s
    return out


@numba.njit(cache=True, nogil=True)
def _sorted_kernel_values(x, order, out):
    # order holds the previous step's ascending permutation; insertion sort is
    # linear when particles barely reorder between steps.
    n = x.shape[0]
    for i in range(1, n):
        j = order[i]
        key = x[j]
        m = i - 1
        while m >= 0 and x[order[m]] > key:
            order[m + 1] = order[m]
            m -= 1
        order[m + 1] = j
    p = n - 1
    while p >= 0:
        q = p
        while q > 0 and x[order[q - 1]] == x[order[p]]:
            q -= 1
        v = (n - q) / n
        for r in range(q, p + 1):
            out[order[r]] = v
        p = q - 1


@numba.njit(cache=True, nogil=True)
def _integrate(code, params, x, dw, h, mean_path):
    nb, n = x.shape
    steps = dw.shape[2]
    record = mean_path.shape[0] > 0
    sin_x = np.empty(n)
    cos_x = np.empty(n)
    kv = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    evals = 0
    for b in range(nb):
        xb = x[b]
        for i in range(n):
            order[i] = i
        if record:
            s = 0.0
            for i in range(n):
                s += xb[i]
            mean_path[b, 0] = s / n
        for k in range(steps):
            evals += 1
            if code == _OU:
                s = 0.0
                for i in range(n):
                    s += xb[i]
                y1 = s / n
                g = params[0]
                be = params[1]
                sig = params[2]
                for i in range(n):
                    xi = xb[i]
                    xb[i] = xi + (g * xi + be * y1) * h + sig * dw[b, i, k]
            elif code == _ROTATOR:
                s1 = 0.0
                s2 = 0.0
                for i in range(n):
                    sin_x[i] = math.sin(xb[i])
                    cos_x[i] = math.cos(xb[i])
                    s1 += sin_x[i]
                    s2 += cos_x[i]
                y1 = s1 / n
                y2 = s2 / n
                kc = params[0]
                sig = params[1]
                for i in range(n):
                    si = sin_x[i]
                    drift = kc * (cos_x[i] * y1 - si * y2) - si
                    xb[i] = xb[i] + drift * h + sig * dw[b, i, k]
            elif code == _POLYNOMIAL:
                s1 = 0.0
                s2 = 0.0
                for i in range(n):
                    s1 += xb[i]
                    s2 += xb[i] * xb[i]
                y1 = s1 / n
                y2 = s2 / n
                g = params[0]
                for i in range(n):
                    xi = xb[i]
                    xb[i] = xi + (g * xi + y1 - xi * y2) * h + xi * dw[b, i, k]
            else:
                _sorted_kernel_values(xb, order, kv)
                sig = params[0]
                for i in range(n):
                    xb[i] = xb[i] + kv[i] * h + sig * dw[b, i, k]
            if record:
                s = 0.0
                for i in range(n):
                    s += xb[i]
                mean_path[b, k + 1] = s / n
    return evals


_NO_PATH = np.empty((0, 0))


def integrate(model: ModelSpec, grid: TimeGrid, initial_draws, increments, record_means=False, check=True):
    """Advance a batch of independent systems to the horizon.

    Parameters
    ----------
    initial_draws : ndarray (B, n)
        Standard normal draws mapped through ``sample_initial``.
    increments : ndarray (B, n, K)
        Brownian increments; may be a column slice of a wider block.
    record_means : bool
        Also return the (B, K+1) path of empirical state means.
    check : bool
        Raise on non-finite final states.  With ``check=False`` divergent
        rows are returned as they are, for the caller to mask.

    Returns
    -------
    states : ndarray (B, n)
        Final states.
    mean_path : ndarray (B, K+1) or None
    evaluations : int
        Interaction evaluations performed (K per system).

    Raises
    ------
    DivergenceError
        If ``check`` and any final state is non-finite; ``row`` is the first
        bad batch row.
    """
    increments = np.asarray(increments, dtype=float)
    if increments.ndim != 3 or increments.shape[2] != grid.steps:
        raise ValueError(f"increments must be (B, n, {grid.steps}), got {increments.shape}")
    x = np.ascontiguousarray(models.sample_initial(model, initial_draws), dtype=float)
    if x.shape != increments.shape[:2]:
        raise ValueError("initial draws and increments disagree on (B, n)")
    code, params = kernel_code(model)
    path = np.empty((x.shape[0], grid.steps + 1)) if record_means else _NO_PATH
    evals = _integrate(code, params, x, increments, grid.h, path)
    bad = ~np.all(np.isfinite(x), axis=1) if check else None
    if check and bad.any():
        row = int(np.argmax(bad))
        raise DivergenceError(f"non-finite state in batch row {row}", row=row, n_particles=x.shape[1])
    return x, (path if record_means else None), evals


def observable_means(observables, states) -> dict:
    n = states.shape[1]
    return {obs.name: _row_sum(np.ascontiguousarray(obs(states))) / n for obs in observables}


def finite_rows(states) -> np.ndarray:
    return np.all(np.isfinite(states), axis=1)


@dataclass
class TripleBatch:
    """Per-run horizon means of the coupled triple, arrays of length B.

    ``finite`` flags the runs whose three systems all stayed finite.
    """

    mean_big: dict
    mean_a: dict
    mean_b: dict
    finite: np.ndarray
    evaluations: int

    def antithetic_diff(self, name) -> np.ndarray:
        return self.mean_big[name] - 0.5 * (self.mean_a[name] + self.mean_b[name])


def simulate_triple_batch(model, grid, n, initial_draws, increments, observables, check=True) -> TripleBatch:
    """Big (2n), A (first n) and B (next n) systems on the first 2n driver columns."""
    if initial_draws.shape[1] < 2 * n:
        raise ValueError(f"need at least {2 * n} driver columns")
    systems = []
    evals = 0
    for lo, hi in ((0, 2 * n), (0, n), (n, 2 * n)):
        x, _, e = integrate(model, grid, initial_draws[:, lo:hi], increments[:, lo:hi], check=check)
        systems.append(x)
        evals += e
    big, a, b = systems
    finite = finite_rows(big) & finite_rows(a) & finite_rows(b)
    return TripleBatch(
        observable_means(observables, big),
        observable_means(observables, a),
        observable_means(observables, b),
        finite,
        evals,
    )


def simulate_single_batch(model, grid, n, initial_draws, increments, observables, check=True):
    """Horizon means of one n-particle system on the first n driver columns.

    Returns ``(means, finite)``.
    """
    x, _, _ = integrate(model, grid, initial_draws[:, :n], increments[:, :n], check=check)
    return observable_means(observables, x), finite_rows(x)
