"""Reversible probabilistic cellular automata on +-1 spin lattices.

Synchronous tanh-rule spin-flip dynamics with symmetric finite-range
kernels: exact stationary measures in product form, their Gibbs
potential, entropy production bookkeeping, contour estimates for the
low-temperature phase transition, and reproducible Monte Carlo
experiments.
"""

from .dynamics import (
    TransitionContext,
    plus_prob_array,
    site_prob,
    step_sample,
    transition_log_prob,
)
from .gibbs import (
    Potential,
    SpinFlip,
    WeightTable,
    hamiltonian,
    log_cosh,
    periodic_stationary_weight,
    stationary_weight,
    transform_model,
    weight_table,
)
from .lattice import (
    BoundaryCondition,
    BoundarySpinMissing,
    Box,
    CouplingKernel,
    ExtendedConfig,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
    extend,
    local_field,
    sublattices,
)
from .rng import ConstantUniforms, CounterUniforms, counter_uniforms, derive_seed

__all__ = [
    "BoundaryCondition",
    "BoundarySpinMissing",
    "Box",
    "ConstantUniforms",
    "CounterUniforms",
    "CouplingKernel",
    "ExtendedConfig",
    "Fixed",
    "ModelError",
    "PcaParams",
    "Periodic",
    "Potential",
    "SpinConfig",
    "SpinFlip",
    "TransitionContext",
    "WeightTable",
    "counter_uniforms",
    "derive_seed",
    "extend",
    "hamiltonian",
    "local_field",
    "log_cosh",
    "periodic_stationary_weight",
    "plus_prob_array",
    "site_prob",
    "stationary_weight",
    "step_sample",
    "sublattices",
    "transform_model",
    "transition_log_prob",
    "weight_table",
]

__version__ = "0.1.0"
