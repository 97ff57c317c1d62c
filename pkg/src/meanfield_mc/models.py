"""Scalar mean-field models.

Each model is described by a :class:`ModelSpec` and four pure functions:
the moment statistic ``statistic``, the ``drift`` and ``diffusion``
coefficients, and ``sample_initial``.  Three of the models interact through
the empirical mean of a statistic (``y = mean(statistic(X_j))``); the viscous
Burgers model interacts through a per-particle kernel value instead, the
fraction of particles lying at or above the particle itself.

All functions broadcast over numpy arrays, so ``x`` may be a scalar or the
full vector of particle states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np


class Variant(str, Enum):
    GENERALIZED_OU = "ou"
    PLANE_ROTATOR = "rotator"
    POLYNOMIAL_DRIFT = "polynomial"
    VISCOUS_BURGERS = "burgers"


_PARAM_NAMES = {
    Variant.GENERALIZED_OU: ("gamma", "beta", "v2", "x0"),
    Variant.PLANE_ROTATOR: ("coupling", "kbt", "init_mean", "init_var"),
    Variant.POLYNOMIAL_DRIFT: ("gamma", "x0"),
    Variant.VISCOUS_BURGERS: ("upsilon", "x0"),
}

# Dimension of the moment statistic; None marks the kernel-interaction model.
STATISTIC_DIM = {
    Variant.GENERALIZED_OU: 1,
    Variant.PLANE_ROTATOR: 2,
    Variant.POLYNOMIAL_DRIFT: 2,
    Variant.VISCOUS_BURGERS: None,
}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """A parameterised mean-field model.

    Use the constructors :func:`generalized_ou`, :func:`plane_rotator`,
    :func:`polynomial_drift` and :func:`viscous_burgers` rather than building
    this directly.
    """

    variant: Variant
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        expected = set(_PARAM_NAMES[variant])
        got = set(self.params)
        if got != expected:
            raise ModelError(
                f"{variant.value} expects parameters {sorted(expected)}, got {sorted(got)}"
            )
        params = {k: float(v) for k, v in self.params.items()}
        for name, value in params.items():
            if not math.isfinite(value):
                raise ModelError(f"parameter {name} must be finite, got {value}")
        if variant is Variant.GENERALIZED_OU and params["v2"] < 0:
            raise ModelError("v2 must be >= 0")
        if variant is Variant.PLANE_ROTATOR:
            if params["kbt"] < 0:
                raise ModelError("kbt must be >= 0")
            if params["init_var"] < 0:
                raise ModelError("init_var must be >= 0")
        if variant is Variant.VISCOUS_BURGERS and params["upsilon"] <= 0:
            raise ModelError("upsilon must be > 0")
        object.__setattr__(self, "params", params)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    @property
    def is_kernel(self) -> bool:
        return self.variant is Variant.VISCOUS_BURGERS

    @property
    def statistic_dim(self) -> int | None:
        return STATISTIC_DIM[self.variant]

    @property
    def deterministic_start(self) -> bool:
        return self.variant is not Variant.PLANE_ROTATOR or self.params["init_var"] == 0.0


def generalized_ou(gamma=-0.5, beta=0.8, v2=0.5, x0=1.0) -> ModelSpec:
    """dX = (gamma X + beta E[X]) dt + sqrt(v2) dW, X_0 = x0.

    The defaults are the reproduction parameters; gamma is negative because
    only gamma = -1/2 reproduces the reference moment values 1.34865 and 2.15552.
    """
    return ModelSpec(Variant.GENERALIZED_OU, dict(gamma=gamma, beta=beta, v2=v2, x0=x0))


def plane_rotator(coupling=1.0, kbt=0.125, init_mean=math.pi / 4, init_var=(3 * math.pi / 4) ** 2) -> ModelSpec:
    """Noisy Kuramoto oscillators in a pinning potential; X_0 ~ N(init_mean, init_var).

    The default initial law has standard deviation 3*pi/4: that reading is the
    one consistent with the reference mean 0.737576.
    """
    return ModelSpec(
        Variant.PLANE_ROTATOR,
        dict(coupling=coupling, kbt=kbt, init_mean=init_mean, init_var=init_var),
    )


def polynomial_drift(gamma=2.0, x0=1.0) -> ModelSpec:
    """dX = (gamma X + E[X] - X E[X^2]) dt + X dW, X_0 = x0."""
    return ModelSpec(Variant.POLYNOMIAL_DRIFT, dict(gamma=gamma, x0=x0))


def viscous_burgers(upsilon=0.25, x0=0.0) -> ModelSpec:
    """dX = P(X_t >= x)|_{x=X_t} dt + upsilon dW, X_0 = x0."""
    return ModelSpec(Variant.VISCOUS_BURGERS, dict(upsilon=upsilon, x0=x0))


def statistic(model: ModelSpec, x):
    """Moment statistic, stacked on the last axis (shape ``x.shape + (p,)``)."""
    x = np.asarray(x, dtype=float)
    v = model.variant
    if v is Variant.GENERALIZED_OU:
        return x[..., None]
    if v is Variant.PLANE_ROTATOR:
        return np.stack([np.sin(x), np.cos(x)], axis=-1)
    if v is Variant.POLYNOMIAL_DRIFT:
        return np.stack([x, x * x], axis=-1)
    raise ModelError("the viscous Burgers model interacts through a kernel and has no moment statistic")


def drift(model: ModelSpec, t, y, x):
    """Drift b(t, y, x).

    For moment models ``y`` is the shared statistic vector of length p (its
    last axis is indexed); for Burgers ``y`` is the per-particle kernel value
    and broadcasts against ``x``.  The models are autonomous, so ``t`` is
    accepted for interface symmetry only.
    """
    p = model.params
    v = model.variant
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if v is Variant.GENERALIZED_OU:
        return p["gamma"] * x + p["beta"] * y[..., 0]
    if v is Variant.PLANE_ROTATOR:
        s, c = np.sin(x), np.cos(x)
        return p["coupling"] * (c * y[..., 0] - s * y[..., 1]) - s
    if v is Variant.POLYNOMIAL_DRIFT:
        return p["gamma"] * x + y[..., 0] - x * y[..., 1]
    # 0*x broadcasts to x's shape and carries non-finite states through
    return y + 0.0 * x


def diffusion(model: ModelSpec, t, y, x):
    p = model.params
    v = model.variant
    x = np.asarray(x, dtype=float)
    if v is Variant.GENERALIZED_OU:
        return np.full_like(x, math.sqrt(p["v2"]))
    if v is Variant.PLANE_ROTATOR:
        return np.full_like(x, math.sqrt(2.0 * p["kbt"]))
    if v is Variant.POLYNOMIAL_DRIFT:
        return x.copy()
    return np.full_like(x, p["upsilon"])


def sample_initial(model: ModelSpec, gaussian_draw):
    """Map standard normal draws to initial states.

    Deterministic starts ignore the draw.  The rotator reads
    ``N(init_mean, init_var)`` with ``init_var`` a variance.
    """
    z = np.asarray(gaussian_draw, dtype=float)
    if model.variant is Variant.PLANE_ROTATOR:
        return model["init_mean"] + math.sqrt(model["init_var"]) * z
    return np.full_like(z, model["x0"])
