import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meanfield_mc import oracles
from meanfield_mc.engine import integrate
from meanfield_mc.models import generalized_ou
from meanfield_mc.paths import make_time_grid

OU = dict(gamma=-0.5, beta=0.8, v2=0.5)


def test_normal_cdf():
    assert oracles.std_normal_cdf(0.0) == 0.5
    assert oracles.std_normal_cdf(2.0) == pytest.approx(0.9772498680518208, rel=1e-15)
    for x in np.linspace(-8, 8, 33):
        assert oracles.std_normal_cdf(x) + oracles.std_normal_cdf(-x) == pytest.approx(1.0, abs=1e-14)


def test_normal_cdf_against_mpmath():
    mpmath.mp.dps = 40
    for x in np.linspace(-8, 8, 161):
        exact = float(mpmath.ncdf(x))
        assert oracles.std_normal_cdf(x) == pytest.approx(exact, rel=1e-14)


def test_ou_exact_moments():
    assert oracles.ou_exact_moments(0.0, x0=2.0, **OU) == (2.0, 4.0)
    m1, _ = oracles.ou_exact_moments(1.0, x0=1.0, **OU)
    assert m1 == pytest.approx(1.3498588075760032, rel=1e-15)
    m1, m2 = oracles.ou_exact_moments(1.3, -0.5, 0.8, 0.0, 1.7)
    assert m2 == pytest.approx(m1 * m1, rel=1e-15)
    _, m2 = oracles.ou_exact_moments(2.0, 0.0, 0.0, 0.5, 0.0)
    assert m2 == pytest.approx(1.0)


def test_ou_first_moment():
    assert round(oracles.ou_discretized_first_moment(50, 0.02, -0.5, 0.8, 1.0), 5) == 1.34865
    assert oracles.ou_discretized_first_moment(0, 0.02, -0.5, 0.8, 3.0) == 3.0


def test_ou_first_moment_converges_linearly():
    exact = oracles.ou_exact_moments(1.0, x0=1.0, **OU)[0]
    errs = [abs(oracles.ou_discretized_first_moment(k, 1.0 / k, -0.5, 0.8, 1.0) - exact) for k in (100, 1000, 10000)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(10, abs=0.5)


def test_ou_second_moment_table_row():
    row = [oracles.ou_discretized_second_moment(50, 0.02, n, x0=1.0, **OU) for n in (20, 40, 80, 160, 320)]
    assert [round(v, 5) for v in row] == [2.15552, 2.14648, 2.14195, 2.13969, 2.13856]
    assert oracles.ou_discretized_second_moment(0, 0.02, 7, x0=1.5, **OU) == 2.25


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(0, 200),
    h=st.floats(1e-3, 0.2),
    n=st.integers(2, 1000),
    gamma=st.floats(-2, 2),
    beta=st.floats(-2, 2),
    v2=st.floats(0, 2),
    x0=st.floats(-2, 2),
)
def test_closed_form_matches_recursion(k, h, n, gamma, beta, v2, x0):
    closed = oracles.ou_discretized_second_moment(k, h, n, gamma, beta, v2, x0)
    rec = oracles.ou_second_moment_recursion(k, h, n, gamma, beta, v2, x0)[0]
    assert closed == pytest.approx(rec, rel=1e-12, abs=1e-300)


def test_closed_form_limits():
    # gamma = 0 and gamma + beta = 0 exercise the limit branches
    for gamma, beta in ((0.0, 0.4), (0.4, -0.4), (0.0, 0.0)):
        closed = oracles.ou_discretized_second_moment(30, 0.05, 10, gamma, beta, 0.7, 1.2)
        rec = oracles.ou_second_moment_recursion(30, 0.05, 10, gamma, beta, 0.7, 1.2)[0]
        assert closed == pytest.approx(rec, rel=1e-12)


def test_recursion_examples():
    sq, cross = oracles.ou_second_moment_recursion(1, 1.0, 5, -0.5, 0.8, 0.0, 1.0)
    assert sq == pytest.approx(1.3**2) and cross == pytest.approx(1.3**2)
    sq, cross = oracles.ou_second_moment_recursion(40, 0.02, 5, -0.5, 0.8, 0.0, 2.0)
    assert sq == pytest.approx(cross, rel=1e-14)
    with pytest.raises(ValueError):
        oracles.ou_second_moment_recursion(1, 0.1, 1, -0.5, 0.8, 0.5, 1.0)


def test_particle_bias():
    b20 = oracles.ou_particle_bias_second_moment(50, 0.02, 20, **OU)
    assert oracles.ou_particle_bias_second_moment(50, 0.02, 10, **OU) == pytest.approx(2 * b20, rel=1e-15)
    assert oracles.ou_particle_bias_second_moment(50, 0.02, 20, -0.5, 0.8, 0.0) == 0.0
    big = 10**15
    limit = oracles.ou_discretized_second_moment(50, 0.02, big, x0=1.0, **OU)
    at20 = oracles.ou_discretized_second_moment(50, 0.02, 20, x0=1.0, **OU)
    assert limit - at20 == pytest.approx(b20, abs=1e-12)


def _polynomial_mp(steps, h, gamma, x0):
    mpmath.mp.dps = 50
    h, gamma = mpmath.mpf(h), mpmath.mpf(gamma)
    m1, m2 = mpmath.mpf(x0), mpmath.mpf(x0) ** 2
    for _ in range(steps):
        a = 1 + gamma * h - m2 * h
        m1, m2 = (1 + (gamma + 1) * h - m2 * h) * m1, a * a * m2 + 2 * a * h * m1 * m1 + m2 * h + m1 * m1 * h * h
    return float(m1), float(m2)


def test_polynomial_recursion():
    assert oracles.polynomial_moment_recursion(0, 0.02, 2.0, 1.0) == (1.0, 1.0)
    m1, m2 = oracles.polynomial_moment_recursion(50, 0.02, 2.0, 1.0)
    assert round(m1, 4) == 1.3845 and round(m2, 5) == 3.13743
    e1, e2 = _polynomial_mp(50, 0.02, 2.0, 1.0)
    assert m1 == pytest.approx(e1, rel=1e-12) and m2 == pytest.approx(e2, rel=1e-12)


def test_polynomial_recursion_bounded():
    m1, m2 = oracles.polynomial_moment_recursion(10_000, 1e-3, -1.0, 1.0)
    assert math.isfinite(m1) and math.isfinite(m2) and 0 <= m2 < 10


def test_burgers():
    assert oracles.burgers_cole_hopf(1.0, 0.5, 0.25) == 0.5
    assert oracles.burgers_cole_hopf(1.0, -1e3, 0.25) == pytest.approx(1.0, abs=1e-12)
    assert oracles.burgers_cole_hopf(1.0, 1e3, 0.25) == pytest.approx(0.0, abs=1e-12)
    xs = np.linspace(-5, 5, 1000)
    f = oracles.burgers_cole_hopf(1.0, xs, 0.25)
    assert np.all(np.diff(f) <= 0) and np.all((f >= 0) & (f <= 1))
    with pytest.raises(ValueError):
        oracles.burgers_cole_hopf(0.0, 0.5, 0.25)


def test_burgers_against_literal_formula():
    mpmath.mp.dps = 40
    for t, x, u in ((1.0, 0.3, 0.25), (0.5, 0.9, 0.5), (2.0, -0.4, 1.0), (1.0, 2.5, 0.25)):
        s = u * mpmath.sqrt(t)
        num = mpmath.ncdf((t - x) / s)
        den = mpmath.exp((2 * x - t) / (2 * u * u)) * mpmath.ncdf(x / s) + num
        assert oracles.burgers_cole_hopf(t, x, u) == pytest.approx(float(num / den), rel=1e-12)


def test_rotator_ode():
    assert oracles.rotator_zero_noise(0.0, 0.7) == pytest.approx(0.7)
    t = 0.37
    x = oracles.rotator_zero_noise(t, 1.1)
    dx = (oracles.rotator_zero_noise(t + 1e-6, 1.1) - oracles.rotator_zero_noise(t - 1e-6, 1.1)) / 2e-6
    assert dx == pytest.approx(-math.sin(x), rel=1e-8)


@pytest.mark.parametrize("k", [3, 50])
def test_first_moment_matches_zero_noise_engine(k):
    grid = make_time_grid(0.8, k)
    x, _, _ = integrate(generalized_ou(v2=0.0, x0=0.6), grid, np.zeros((1, 3)), np.zeros((1, 3, k)))
    assert x[0, 0] == pytest.approx(oracles.ou_discretized_first_moment(k, grid.h, -0.5, 0.8, 0.6), rel=1e-12)
