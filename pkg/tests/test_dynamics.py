import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcalab.dynamics import (
    TransitionContext,
    local_field_array,
    plus_prob_array,
    plus_prob_values,
    site_prob,
    step_sample,
    transition_log_prob,
)
from pcalab.lattice import (
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
    extend,
)
from pcalab.rng import ConstantUniforms, CounterUniforms

finite_fields = st.floats(-50, 50, allow_nan=False)


def make_ctx(beta=1.0, h=0.0, k=(0.0, 1.0, 1.0), sides=(3, 3), bc=None):
    params = PcaParams(beta=beta, h=h, kernel=CouplingKernel.range1(*k))
    return TransitionContext(params, Box(sides), bc if bc is not None else Periodic())


def test_single_site_update_probability():
    # one site, pure self-coupling: field is k0*spin, beta 1
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel({(0, 0): 1.0}, dim=2))
    ctx = TransitionContext(params, Box((1, 1)), Periodic())
    config = SpinConfig.constant(ctx.box, 1)
    ext = extend(config, Periodic())
    p = site_prob(1, (0, 0), ext, ctx)
    assert p == pytest.approx(0.8807970779778823, abs=1e-15)
    assert site_prob(-1, (0, 0), ext, ctx) == 1.0 - p


def test_high_temperature_is_fair_coin():
    ctx = make_ctx(beta=1e-9, k=(0.3, 0.8, 0.5), h=0.2)
    config = SpinConfig.constant(ctx.box, 1)
    probs = plus_prob_array(config, ctx)
    assert np.all(np.abs(probs - 0.5) < 1e-8)


@given(finite_fields)
def test_complement_is_exact(x):
    p = plus_prob_values(np.array([x]))[0]
    q = plus_prob_values(np.array([-x]))[0]
    # the two one-site probabilities must sum to 1 in floating point
    assert p + q == 1.0
    assert 0.0 < p < 1.0


def test_probabilities_stay_strictly_inside_unit_interval():
    x = np.array([-1e6, -800.0, 0.0, 800.0, 1e6])
    p = plus_prob_values(x)
    assert np.all(p > 0.0) and np.all(p < 1.0)
    assert p[2] == 0.5


def test_alternation_flip_probability_is_tiny():
    # saturated antiferro field: every site sees -8 after an all-plus sweep
    ctx = make_ctx(beta=2.0, k=(0.0, -1.0, -1.0), sides=(4, 4))
    config = SpinConfig.constant(ctx.box, 1)
    probs = plus_prob_array(config, ctx)
    stay = 0.5 * (1.0 - math.tanh(8.0))
    assert np.all(np.abs(probs - stay) < 1e-14)
    assert probs[0, 0] < 2e-7


def test_local_field_array_matches_scalar():
    ctx = make_ctx(beta=0.7, h=0.3, k=(0.4, 1.0, -0.6), bc=Fixed.uniform(-1))
    rng = np.random.default_rng(1)
    config = SpinConfig(ctx.box, rng.choice([-1, 1], size=ctx.box.sides))
    from pcalab.lattice import local_field

    ext = extend(config, ctx.bc)
    fields = local_field_array(config, ctx)
    for site in ctx.box.sites():
        assert fields[site] == pytest.approx(local_field(site, ext, ctx.params), abs=1e-12)


def test_transition_log_prob_normalizes():
    ctx = make_ctx(beta=0.9, h=0.15, k=(0.2, 0.7, -0.4), sides=(2, 2))
    prev = SpinConfig.from_index(ctx.box, 9)
    total = 0.0
    for index in range(2**ctx.box.n_sites):
        total += math.exp(transition_log_prob(prev, SpinConfig.from_index(ctx.box, index), ctx))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_step_sample_forced_by_uniforms():
    ctx = make_ctx(beta=0.8, k=(0.0, 1.0, 1.0))
    config = SpinConfig.constant(ctx.box, -1)
    up = step_sample(config, ctx, ConstantUniforms(0.0), step=0)
    down = step_sample(config, ctx, ConstantUniforms(1.0 - 2.0**-53), step=0)
    assert np.all(up.spins == 1)
    assert np.all(down.spins == -1)


def test_step_sample_is_reproducible():
    ctx = make_ctx(beta=0.8, k=(0.1, 1.0, 0.5), sides=(4, 4))
    config = SpinConfig.constant(ctx.box, 1)
    a = step_sample(config, ctx, CounterUniforms(7), step=3)
    b = step_sample(config, ctx, CounterUniforms(7), step=3)
    c = step_sample(config, ctx, CounterUniforms(8), step=3)
    assert np.array_equal(a.spins, b.spins)
    assert not np.array_equal(a.spins, c.spins)


def test_fixed_boundary_requires_referenced_spins():
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel.range1(0.0, 1.0, 1.0))
    with pytest.raises(ModelError):
        TransitionContext(params, Box((2, 2)), Fixed({}))


def test_dimension_mismatch_rejected():
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel.range1(0.0, 1.0, 1.0))
    with pytest.raises(ModelError):
        TransitionContext(params, Box((2, 2, 2)), Periodic())
