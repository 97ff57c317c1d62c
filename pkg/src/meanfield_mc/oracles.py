"""Closed-form and recursive reference values.

Generalized Ornstein-Uhlenbeck
    dX = (gamma X + beta E[X]) dt + upsilon dW.  Exact moments of the limit
    SDE, exact moments of the Euler particle scheme (closed form and the
    coupled second-moment recursion it solves), and the exact 1/N bias of
    the discretized second moment.
Polynomial drift
    Moment recursion of the Euler scheme of the limit SDE.
Viscous Burgers
    Cole-Hopf solution P(X_t >= x) for X_0 = 0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def std_normal_cdf(x):
    """Standard normal CDF from the complementary error function."""
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def _geometric(a_minus_1: float, k: int) -> float:
    """(a**k - 1) / (a - 1), with the limit k at a = 1; accurate near a = 1."""
    if k == 0:
        return 0.0
    if a_minus_1 == 0.0:
        return float(k)
    if abs(a_minus_1) < 0.5:
        return math.expm1(k * math.log1p(a_minus_1)) / a_minus_1
    return ((1.0 + a_minus_1) ** k - 1.0) / a_minus_1


def _discrete_variance_factor(c: float, h: float, k: int) -> float:
    # ((1 + c h)^(2k) - 1) / (2c + c^2 h), i.e. h * sum_{j<k} (1 + c h)^(2j)
    return h * _geometric(c * h * (2.0 + c * h), k)


def ou_exact_moments(t: float, gamma: float, beta: float, v2: float, x0: float):
    """First and second moments of the limit OU SDE at time t.

    At gamma = 0 the variance term takes its limit ``v2 * t``.
    """
    m1 = x0 * math.exp((gamma + beta) * t)
    if gamma == 0.0:
        var_term = v2 * t
    else:
        var_term = v2 * math.expm1(2.0 * gamma * t) / (2.0 * gamma)
    return m1, x0 * x0 * math.exp(2.0 * (gamma + beta) * t) + var_term


def ou_discretized_first_moment(k: int, h: float, gamma: float, beta: float, x0: float) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return (1.0 + (gamma + beta) * h) ** k * x0


def ou_discretized_second_moment(k: int, h: float, n: int, gamma: float, beta: float, v2: float, x0: float) -> float:
    """E[(X^{1,N,h}_{kh})^2] of the Euler particle scheme, exactly.

    Vanishing denominators (gamma = 0, gamma + beta = 0, or c h = -2) are
    replaced by their limits.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    c = gamma + beta
    return (
        (1.0 + c * h) ** (2 * k) * x0 * x0
        + (n - 1) / n * _discrete_variance_factor(gamma, h, k) * v2
        + 1.0 / n * _discrete_variance_factor(c, h, k) * v2
    )


def ou_second_moment_recursion(k: int, h: float, n: int, gamma: float, beta: float, v2: float, x0: float):
    """Iterate the coupled recursion for (E[(X^1)^2], E[X^1 X^2]) from (x0^2, x0^2)."""
    if n < 2:
        raise ValueError("the cross moment needs n >= 2")
    a = (1.0 + gamma * h) ** 2
    coupling = (2.0 * (1.0 + gamma * h) + beta * h) * beta * h
    sq = cross = x0 * x0
    for _ in range(k):
        mixed = coupling * (sq / n + (n - 1) / n * cross)
        sq, cross = a * sq + mixed + v2 * h, a * cross + mixed
    return sq, cross


def ou_particle_bias_second_moment(k: int, h: float, n: int, gamma: float, beta: float, v2: float) -> float:
    """E[(X^h_{kh})^2] - E[(X^{1,N,h}_{kh})^2]; exactly proportional to 1/N."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (
        _discrete_variance_factor(gamma, h, k) - _discrete_variance_factor(gamma + beta, h, k)
    ) * v2 / n


def polynomial_moment_recursion(steps: int, h: float, gamma: float, x0: float):
    """(E[X^h_T], E[(X^h_T)^2]) for the Euler scheme of the polynomial-drift SDE."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    m1, m2 = x0, x0 * x0
    for _ in range(steps):
        a = 1.0 + gamma * h - m2 * h
        m1, m2 = (
            (1.0 + (gamma + 1.0) * h - m2 * h) * m1,
            a * a * m2 + 2.0 * a * h * m1 * m1 + m2 * h + m1 * m1 * h * h,
        )
    return m1, m2


def burgers_cole_hopf(t: float, x, upsilon: float):
    """P(X_t >= x) for the Burgers mean-field SDE started at 0.

    Written as ``1 / (1 + exp(L))`` with ``L`` assembled from log-CDFs, so
    neither tail overflows.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    if not upsilon > 0:
        raise ValueError("upsilon must be > 0")
    x = np.asarray(x, dtype=float)
    s = upsilon * math.sqrt(t)
    log_ratio = (2.0 * x - t) / (2.0 * upsilon**2) + special.log_ndtr(x / s) - special.log_ndtr((t - x) / s)
    out = special.expit(-log_ratio)
    return float(out) if out.ndim == 0 else out


def rotator_zero_noise(t, x0: float):
    """Solution of dx/dt = -sin x: tan(x_t / 2) = tan(x0 / 2) exp(-t), for |x0| < pi."""
    return 2.0 * np.arctan(math.tan(x0 / 2.0) * np.exp(-np.asarray(t, dtype=float)))


# Monte Carlo reference for E[X_1] of the plane rotator (coupling 1, kBT=1/8,
# X_0 ~ N(pi/4, (3 pi/4)^2), 50 steps): 2.5e8 runs with 1000 particles.
# An external estimate, not an exact value.
ROTATOR_REFERENCE_MEAN = 0.737576
