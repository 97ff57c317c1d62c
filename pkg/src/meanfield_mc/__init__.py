"""Particle Monte Carlo for McKean-Vlasov SDEs: bias and antithetic-variance experiments."""

__version__ = "0.1.0"

from .engine import (  # noqa: E402
    FIRST_MOMENT,
    SECOND_MOMENT,
    DivergenceError,
    Observable,
    ParticleEnsemble,
    euler_step,
    indicator_above,
    integrate,
    simulate_run,
    simulate_single_batch,
    simulate_triple_batch,
)
from .models import (  # noqa: E402
    ModelError,
    ModelSpec,
    Variant,
    generalized_ou,
    plane_rotator,
    polynomial_drift,
    viscous_burgers,
)
from .paths import TimeGrid, derive_stream, fill_driver_block, fill_driver_blocks, make_time_grid  # noqa: E402
from .stats import MomentAccumulator, antithetic_variance, bias_table, precision  # noqa: E402
