import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcalab.gibbs import (
    ExactSizeError,
    Potential,
    SpinFlip,
    hamiltonian,
    log_cosh,
    periodic_stationary_log_weight,
    stationary_log_weight,
    transform_model,
    weight_table,
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


def random_config(box, seed):
    rng = np.random.default_rng(seed)
    return SpinConfig(box, rng.choice([-1, 1], size=box.sides))


@given(st.floats(-30, 30))
def test_log_cosh_matches_math(x):
    assert log_cosh(x) == pytest.approx(math.log(math.cosh(x)), abs=1e-12)


def test_log_cosh_never_overflows():
    big = log_cosh(800.0)
    assert big == pytest.approx(800.0 - math.log(2.0), abs=1e-12)
    assert np.isfinite(log_cosh(np.array([1e6, -1e6]))).all()


def test_zero_kernel_hamiltonian_is_field_only():
    box = Box((2, 3))
    params = PcaParams(beta=0.8, h=0.4, kernel=CouplingKernel.zero(2))
    config = random_config(box, 0)
    expected = -0.8 * 0.4 * config.spins.sum()
    assert hamiltonian(config, Periodic(), params) == pytest.approx(expected, abs=1e-12)


def test_single_site_torus_hamiltonian():
    # every offset wraps back onto the site, so the field is total*spin + h
    box = Box((1, 1))
    params = PcaParams(beta=1.3, h=0.2, kernel=CouplingKernel.range1(0.5, 1.0, -0.25))
    for spin in (-1, 1):
        config = SpinConfig.constant(box, spin)
        expected = -1.3 * 0.2 * spin - log_cosh(1.3 * (params.kernel.total * spin + 0.2))
        assert hamiltonian(config, Periodic(), params) == pytest.approx(expected, abs=1e-12)


def test_hamiltonian_is_even_without_field():
    box = Box((3, 2))
    params = PcaParams(beta=0.9, h=0.0, kernel=CouplingKernel.range1(0.3, 1.0, 0.7))
    config = random_config(box, 3)
    flipped = SpinConfig(box, -config.spins)
    a = hamiltonian(config, Periodic(), params)
    b = hamiltonian(flipped, Periodic(), params)
    assert a == pytest.approx(b, abs=1e-12)


def test_potential_terms_assemble_hamiltonian():
    box = Box((2, 2))
    params = PcaParams(beta=0.7, h=0.3, kernel=CouplingKernel.range1(0.2, 0.6, -0.4))
    config = random_config(box, 5)
    ext = extend(config, Periodic())
    pot = Potential(params)
    total = sum(
        pot.singleton_term(config.spin_at(i)) + pot.neighborhood_term(i, ext)
        for i in box.sites()
    )
    assert total == pytest.approx(hamiltonian(config, Periodic(), params), abs=1e-12)


@pytest.mark.parametrize("bc_name", ["periodic", "plus", "random"])
def test_three_routes_to_the_same_table(bc_name):
    box = Box((2, 3))
    params = PcaParams(beta=0.85, h=0.2, kernel=CouplingKernel.range1(0.3, 0.9, -0.5))
    if bc_name == "periodic":
        bc = Periodic()
    elif bc_name == "plus":
        bc = Fixed.uniform(1)
    else:
        rng = np.random.default_rng(11)
        bc = Fixed(
            {s: int(rng.choice([-1, 1])) for s in box.exterior_closure(2)}
        )
    reference = weight_table(box, bc, params, route="hamiltonian").probabilities()
    product = weight_table(box, bc, params, route="product").probabilities()
    assert np.abs(reference - product).max() <= 1e-12
    # the reversible measure coincides with the Gibbs one exactly on the torus
    closed = weight_table(box, bc, params, route="closed_form").probabilities()
    if bc_name == "periodic":
        assert np.abs(reference - closed).max() <= 1e-12
    else:
        assert np.abs(reference - closed).max() > 1e-3


def test_stationary_log_weight_needs_fixed_boundary():
    box = Box((2, 2))
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel.range1(0.0, 1.0, 1.0))
    config = SpinConfig.constant(box, 1)
    assert math.isfinite(stationary_log_weight(config, Fixed.uniform(1), params))
    assert math.isfinite(periodic_stationary_log_weight(config, params))


def test_weight_table_size_guard():
    box = Box((5, 5))
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel.range1(0.0, 1.0, 1.0))
    with pytest.raises(ExactSizeError):
        weight_table(box, Periodic(), params, route="closed_form")


def test_weight_table_csv_roundtrip(tmp_path):
    box = Box((2, 2))
    params = PcaParams(beta=0.9, h=0.1, kernel=CouplingKernel.range1(0.2, 0.8, 0.4))
    table = weight_table(box, Periodic(), params, route="closed_form")
    path = tmp_path / "table.csv"
    table.write_csv(path, provenance={"beta": 0.9})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = next(l for l in lines if not l.startswith("#"))
    assert header == "config_index,probability"
    probs = [float(l.split(",")[1]) for l in lines if "," in l and not l.startswith(("#", "config"))]
    assert np.array(probs) == pytest.approx(table.probabilities(), abs=1e-15)


# spin flip conjugations ----------------------------------------------------


def test_checkerboard_flip_pattern():
    flip = SpinFlip(coeffs=(1, 1))
    assert flip.flips((0, 1)) and flip.flips((1, 0))
    assert not flip.flips((0, 0)) and not flip.flips((1, 1))
    stripe = SpinFlip(coeffs=(1, 0))
    assert stripe.flips((1, 5)) and not stripe.flips((2, 5))


def test_flip_apply_and_index_permutation_agree():
    box = Box((2, 3))
    flip = SpinFlip(coeffs=(1, 1))
    perm = flip.index_permutation(box)
    for index in (0, 5, 17, 63):
        config = SpinConfig.from_index(box, index)
        assert flip.apply(config).encode() == perm[index]


@settings(max_examples=25)
@given(st.integers(0, 2**9 - 1))
def test_center_negation_preserves_gibbs_measure(index):
    # negating the self-coupling is undone by a checkerboard relabeling
    box = Box((3, 3))
    params = PcaParams(beta=0.8, h=0.0, kernel=CouplingKernel.range1(0.6, 1.0, 0.4))
    bc = Fixed.uniform(1)
    new_params, flip = transform_model(params, (0, 0))
    assert new_params.kernel[(0, 0)] == -0.6
    new_bc = flip.apply_bc(bc, box, reach=2)
    base = weight_table(box, bc, params, route="hamiltonian").probabilities()
    moved = weight_table(box, new_bc, new_params, route="hamiltonian").probabilities()
    perm = flip.index_permutation(box)
    assert abs(base[index] - moved[perm[index]]) <= 1e-12


def test_axis_negation_uses_stripe_flip():
    params = PcaParams(beta=0.8, h=0.0, kernel=CouplingKernel.range1(0.0, 1.0, 0.4))
    new_params, flip = transform_model(params, (1, 0))
    assert new_params.kernel[(1, 0)] == -1.0
    assert new_params.kernel[(0, 1)] == 0.4
    assert flip.coeffs == (1, 0)


def test_transform_requires_zero_field_and_nonzero_coupling():
    k = CouplingKernel.range1(0.5, 1.0, 0.4)
    with pytest.raises(ModelError):
        transform_model(PcaParams(beta=1.0, h=0.3, kernel=k), (0, 0))
    k0 = CouplingKernel.range1(0.0, 1.0, 0.4)
    with pytest.raises(ModelError):
        transform_model(PcaParams(beta=1.0, h=0.0, kernel=k0), (0, 0))


def test_periodic_flip_needs_even_sides():
    flip = SpinFlip(coeffs=(1, 1))
    with pytest.raises(ModelError):
        flip.apply_bc(Periodic(), Box((3, 3)), reach=1)
    assert isinstance(flip.apply_bc(Periodic(), Box((2, 4)), reach=1), Periodic)
