"""Estimators over Monte Carlo runs.

Variances use the unbiased (count - 1) divisor throughout.  Errors follow
the convention ``difference = reference - estimate``; ratios of decrease are
taken on absolute values, ``|e(N/2)| / |e(N)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Z95 = 1.96


@dataclass
class MomentAccumulator:
    """Streaming count / mean / sum of squared deviations (Welford, Chan merge)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, sample: float) -> "MomentAccumulator":
        self.count += 1
        delta = sample - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (sample - self.mean)
        return self

    def add_array(self, samples) -> "MomentAccumulator":
        """Fold in a whole array (two-pass on the array, then merged)."""
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            return self
        mean = float(samples.mean())
        chunk = MomentAccumulator(samples.size, mean, float(np.sum((samples - mean) ** 2)))
        merged = self.merge(chunk)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return MomentAccumulator(self.count, self.mean, self.m2)
        if self.count == 0:
            return MomentAccumulator(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return MomentAccumulator(n, mean, m2)

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise ValueError("variance needs at least two samples")
        return self.m2 / (self.count - 1)


def accumulate(acc: MomentAccumulator, sample: float) -> MomentAccumulator:
    return MomentAccumulator(acc.count, acc.mean, acc.m2).add(sample)


def precision(acc: MomentAccumulator) -> float:
    """Half-width of the 95% confidence interval of the mean."""
    if acc.count < 2:
        raise ValueError("precision needs at least two runs")
    return Z95 * math.sqrt(acc.variance / acc.count)


def antithetic_variance(diffs):
    """Sample variance of the antithetic differences and its 95% half-width.

    The half-width treats the variance as the mean of the squared
    deviations ``(D - mean(D))**2`` and uses their spread.
    """
    d = np.asarray(diffs, dtype=float).ravel()
    if d.size < 2:
        raise ValueError("need at least two runs")
    sq = (d - d.mean()) ** 2
    var = float(sq.sum() / (d.size - 1))
    return var, Z95 * math.sqrt(float(np.var(sq, ddof=1)) / d.size)


def ratio_of_decrease(values):
    """``|v[i-1]| / |v[i]|`` per entry; ``None`` for the first entry and for zero denominators."""
    out = [None]
    for prev, cur in zip(values[:-1], values[1:]):
        out.append(abs(prev) / abs(cur) if cur != 0 else None)
    return out


@dataclass(frozen=True)
class BiasRow:
    n: int
    estimate: float
    reference: float
    difference: float
    precision: float
    ratio_of_decrease: float | None = None
    ratio_undefined: bool = False


def bias_table(ns, estimates, references, precisions) -> list[BiasRow]:
    """One row per particle count of a doubling schedule."""
    ns = [int(n) for n in ns]
    if not (len(ns) == len(estimates) == len(references) == len(precisions)):
        raise ValueError("all columns must have the same length")
    for a, b in zip(ns[:-1], ns[1:]):
        if b != 2 * a:
            raise ValueError(f"particle counts must double, got {a} then {b}")
    diffs = [float(r) - float(e) for r, e in zip(references, estimates)]
    ratios = ratio_of_decrease(diffs)
    return [
        BiasRow(
            n, float(e), float(r), d, float(p), ratio,
            ratio_undefined=(i > 0 and ratio is None),
        )
        for i, (n, e, r, d, p, ratio) in enumerate(zip(ns, estimates, references, diffs, precisions, ratios))
    ]
