"""Time grids and reproducible Brownian drivers.

Every run owns an independent Philox stream keyed by ``(master_seed,
run_index)`` through :class:`numpy.random.SeedSequence`, so a run can be
regenerated in isolation and the result does not depend on how runs are
distributed over workers.

Within a run the variates are consumed particle by particle: particle ``i``
takes its initial draw followed by its ``K`` increments, then particle
``i + 1`` starts.  The drivers of the first ``n`` particles are therefore a
prefix of the stream whatever the total width, which is what lets one
``2N`` block feed the big system and both ``N``-particle subsystems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise GridError(f"steps must be a positive integer, got {self.steps!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise GridError(f"horizon must be positive and finite, got {self.horizon!r}")

    @property
    def h(self) -> float:
        return self.horizon / self.steps

    def time(self, k: int) -> float:
        """Grid time ``t_k = k h``; ``t_K`` is exactly the horizon."""
        if k == self.steps:
            return float(self.horizon)
        return k * self.h

    def times(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.h
        t[-1] = self.horizon
        return t

    def frozen_time(self, s: float) -> float:
        """Last grid time at or before ``s`` (coefficients are frozen there)."""
        k = min(int(math.floor(s / self.h)), self.steps)
        return self.time(k)


def make_time_grid(horizon: float, steps: int) -> TimeGrid:
    return TimeGrid(float(horizon), steps)


@dataclass(frozen=True)
class RunStream:
    """Value-like handle on the random stream of one run.

    ``generator()`` always starts from the beginning of the stream, so
    handing the same ``RunStream`` around never consumes it.
    """

    master_seed: int
    run_index: int

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.run_index,))
        return np.random.Generator(np.random.Philox(seq))

    def normals(self, count: int) -> np.ndarray:
        return self.generator().standard_normal(count)


def derive_stream(master_seed: int, run_index: int) -> RunStream:
    if master_seed < 0 or run_index < 0:
        raise ValueError("master_seed and run_index must be non-negative")
    return RunStream(int(master_seed), int(run_index))


@dataclass(frozen=True)
class DriverBlock:
    """Drivers of ``width`` particles for one run.

    ``initial_draws`` has shape ``(width,)`` (standard normals) and
    ``increments`` shape ``(K, width)`` (Brownian increments, variance h).
    Column ``i`` drives particle ``i``.
    """

    initial_draws: np.ndarray
    increments: np.ndarray

    @property
    def width(self) -> int:
        return self.initial_draws.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    def columns(self, start: int, stop: int) -> "DriverBlock":
        return DriverBlock(self.initial_draws[start:stop], self.increments[:, start:stop])


def _draw(stream: RunStream, grid: TimeGrid, width: int) -> tuple[np.ndarray, np.ndarray]:
    z = stream.normals(width * (grid.steps + 1)).reshape(width, grid.steps + 1)
    return z[:, 0], z[:, 1:] * math.sqrt(grid.h)


def fill_driver_block(stream: RunStream, grid: TimeGrid, n_pairs: int) -> DriverBlock:
    """Drivers for the coupled triple: ``2 * n_pairs`` particles."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    return fill_driver_block_width(stream, grid, 2 * n_pairs)


def fill_driver_block_width(stream: RunStream, grid: TimeGrid, width: int) -> DriverBlock:
    initial, incr = _draw(stream, grid, width)
    return DriverBlock(initial, np.ascontiguousarray(incr.T))


def fill_driver_blocks(master_seed: int, run_indices, grid: TimeGrid, width: int):
    """Batched drivers for many runs, laid out for the integration kernel.

    Returns ``(initial, increments)`` with shapes ``(B, width)`` and
    ``(B, width, K)``.  Row ``b`` is bit-identical to
    ``fill_driver_block_width(derive_stream(master_seed, run_indices[b]), ...)``.
    """
    run_indices = np.asarray(run_indices, dtype=np.int64)
    nb = run_indices.shape[0]
    m = grid.steps + 1
    z = np.empty((nb, width, m))
    for b, r in enumerate(run_indices):
        derive_stream(master_seed, int(r)).generator().standard_normal(out=z[b].reshape(-1))
    initial = z[:, :, 0].copy()
    incr = z[:, :, 1:]
    incr *= math.sqrt(grid.h)
    return initial, incr
