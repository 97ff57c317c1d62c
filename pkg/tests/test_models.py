import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanfield_mc.models import (
    ModelError,
    ModelSpec,
    Variant,
    diffusion,
    drift,
    generalized_ou,
    plane_rotator,
    polynomial_drift,
    sample_initial,
    statistic,
    viscous_burgers,
)

finite = st.floats(-50, 50, allow_nan=False)


def test_statistic_examples():
    assert statistic(generalized_ou(), 1.0).tolist() == [1.0]
    assert statistic(plane_rotator(), 0.0).tolist() == [0.0, 1.0]
    assert statistic(polynomial_drift(), 2.0).tolist() == [2.0, 4.0]


def test_statistic_rejects_burgers():
    with pytest.raises(ModelError):
        statistic(viscous_burgers(), 0.0)


def test_drift_examples():
    assert drift(generalized_ou(), 0, [1.0], 1.0) == pytest.approx(0.3, abs=1e-15)
    assert drift(polynomial_drift(), 0, [1.0, 1.0], 1.0) == 2.0
    assert drift(viscous_burgers(), 0, 0.25, 3.0) == 0.25


def test_diffusion_examples():
    assert diffusion(generalized_ou(v2=0.5), 0, None, 0.0) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert diffusion(plane_rotator(kbt=1 / 8), 0, None, 1.0) == 0.5
    assert diffusion(polynomial_drift(), 0, None, -3.0) == -3.0
    assert diffusion(viscous_burgers(upsilon=0.25), 0, None, 7.0) == 0.25


def test_sample_initial():
    assert sample_initial(viscous_burgers(), 1.3) == 0.0
    assert sample_initial(generalized_ou(), -0.4) == 1.0
    assert sample_initial(plane_rotator(), 0.0) == pytest.approx(math.pi / 4)
    rot = plane_rotator(init_mean=0.0, init_var=4.0)
    assert sample_initial(rot, 1.0) == 2.0


@pytest.mark.parametrize(
    "factory, kwargs",
    [
        (viscous_burgers, dict(upsilon=0.0)),
        (plane_rotator, dict(kbt=-1.0)),
        (plane_rotator, dict(init_var=-0.1)),
        (generalized_ou, dict(v2=-1.0)),
        (generalized_ou, dict(gamma=math.nan)),
    ],
)
def test_invalid_parameters(factory, kwargs):
    with pytest.raises(ModelError):
        factory(**kwargs)


def test_wrong_parameter_set():
    with pytest.raises(ModelError):
        ModelSpec(Variant.GENERALIZED_OU, dict(gamma=1.0))


def test_drift_propagates_non_finite():
    assert math.isnan(drift(viscous_burgers(), 0, 1.0, math.nan))
    assert not math.isfinite(drift(generalized_ou(), 0, [1.0], math.inf))


@given(x=finite, theta=finite, k=st.floats(-5, 5))
def test_rotator_trig_identity(x, theta, k):
    model = plane_rotator(coupling=k)
    y = [math.sin(theta), math.cos(theta)]
    assert drift(model, 0, y, x) == pytest.approx(k * math.sin(theta - x) - math.sin(x), abs=1e-12)


@given(x=finite, theta=finite)
def test_rotator_point_mass_drift(x, theta):
    model = plane_rotator()
    assert drift(model, 0, statistic(model, x), x) == pytest.approx(-math.sin(x), abs=1e-12)


@given(x=finite, y1=st.tuples(finite, finite), y2=st.tuples(finite, finite))
def test_moment_drift_affine_in_y(x, y1, y2):
    for model, p in ((generalized_ou(), 1), (polynomial_drift(), 2)):
        a, b = np.array(y1[:p]), np.array(y2[:p])
        lhs = drift(model, 0, a + b, x) + drift(model, 0, np.zeros(p), x)
        rhs = drift(model, 0, a, x) + drift(model, 0, b, x)
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)) * 100)


def test_constant_diffusions():
    rng = np.random.default_rng(1)
    x = rng.normal(size=100) * 10
    for model in (generalized_ou(), plane_rotator(), viscous_burgers()):
        values = diffusion(model, rng.uniform(size=100), rng.normal(size=100), x)
        assert np.all(values == values[0])
