import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meanfield_mc.stats import (
    MomentAccumulator,
    accumulate,
    antithetic_variance,
    bias_table,
    precision,
    ratio_of_decrease,
)


def _acc(values):
    a = MomentAccumulator()
    for v in values:
        a = accumulate(a, v)
    return a


def test_accumulate_examples():
    a = _acc([1, 1, 1])
    assert (a.mean, a.variance) == (1.0, 0.0)
    a = _acc([0, 2])
    assert (a.mean, a.variance) == (1.0, 2.0)


def test_merge_equals_two_pass():
    x = np.arange(1, 1001, dtype=float)
    merged = _acc(x[:500]).merge(_acc(x[500:]))
    assert merged.count == 1000
    assert merged.mean == pytest.approx(x.mean(), rel=1e-12)
    assert merged.variance == pytest.approx(x.var(ddof=1), rel=1e-12)


@settings(max_examples=60)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=60),
    st.lists(st.integers(1, 59), max_size=5),
)
def test_merge_any_partition(values, cuts):
    x = np.array(values)
    cuts = sorted({c for c in cuts if c < len(x)})
    parts = np.split(x, cuts)
    accs = [MomentAccumulator().add_array(p) for p in parts]
    fwd = MomentAccumulator()
    for a in accs:
        fwd = fwd.merge(a)
    rev = MomentAccumulator()
    for a in reversed(accs):
        rev = rev.merge(a)
    scale = 1 + np.abs(x).max()
    for acc in (fwd, rev):
        assert acc.count == len(x)
        assert acc.mean == pytest.approx(x.mean(), rel=1e-12, abs=1e-12 * scale)
        assert acc.m2 >= 0
        assert acc.variance == pytest.approx(x.var(ddof=1), rel=1e-12, abs=1e-12 * scale**2)


def test_precision():
    assert precision(_acc([2, 2, 2])) == 0.0
    assert precision(MomentAccumulator(10_000, 0.0, 9_999.0)) == pytest.approx(0.0196, rel=1e-15)
    a = MomentAccumulator(100, 0.0, 99 * 3.0)
    b = MomentAccumulator(400, 0.0, 399 * 3.0)
    assert precision(b) == pytest.approx(precision(a) / 2, rel=1e-12)
    with pytest.raises(ValueError):
        precision(_acc([1.0]))


def test_antithetic_variance():
    assert antithetic_variance(np.full(10, 0.25)) == (0.0, 0.0)
    d = np.array([1.0, -1.0, 2.0, 0.0])
    var, prec = antithetic_variance(d)
    assert var == pytest.approx(d.var(ddof=1))
    sq = (d - d.mean()) ** 2
    assert prec == pytest.approx(1.96 * math.sqrt(sq.var(ddof=1) / 4))
    with pytest.raises(ValueError):
        antithetic_variance([1.0])


def test_ratios():
    assert ratio_of_decrease([0.0141425, 0.0070329])[1] == pytest.approx(2.01091, abs=5e-6)
    assert ratio_of_decrease([0.000725, 0.000355])[1] == pytest.approx(2.04225, abs=5e-6)
    assert ratio_of_decrease([0.5, -0.5]) == [None, 1.0]


def test_bias_table():
    rows = bias_table([20, 40], [1.34862, 1.3], [1.34865, 1.34865], [1e-4, 1e-4])
    assert rows[0].difference == pytest.approx(0.00003, abs=1e-12)
    assert rows[0].ratio_of_decrease is None and not rows[0].ratio_undefined
    assert rows[1].ratio_of_decrease == pytest.approx(0.00003 / abs(1.34865 - 1.3), rel=1e-6)
    rows = bias_table([20, 40], [1.0, 1.0], [1.0, 1.0], [0.1, 0.1])
    assert rows[1].ratio_of_decrease is None and rows[1].ratio_undefined
    with pytest.raises(ValueError):
        bias_table([20, 30], [1, 1], [1, 1], [1, 1])
