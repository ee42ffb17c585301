import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcalab.lattice import (
    BoundarySpinMissing,
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
    extend,
    local_field,
    sublattices,
)

small_boxes = st.builds(
    Box,
    st.tuples(st.integers(1, 3), st.integers(1, 3)),
    st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
)


def test_sites_are_lexicographic():
    box = Box((2, 3), origin=(1, 0))
    expected = [
        (1, 0), (1, 1), (1, 2),
        (2, 0), (2, 1), (2, 2),
    ]
    assert list(box.sites()) == expected
    for j, site in enumerate(box.sites()):
        assert box.site_index(site) == j


def test_wrap_is_periodic():
    box = Box((3, 4))
    assert box.wrap((3, 4)) == (0, 0)
    assert box.wrap((-1, -1)) == (2, 3)
    assert box.wrap((1, 2)) == (1, 2)


def test_closure_matches_brute_force():
    box = Box((3, 2), origin=(-1, 0))
    m = 2
    brute = {
        s
        for s in itertools.product(range(-6, 7), repeat=2)
        if min(
            max(abs(s[0] - t[0]), abs(s[1] - t[1])) for t in box.sites()
        ) <= m
    }
    assert set(box.closure(m)) == brute
    assert set(box.exterior_closure(m)) == brute - set(box.sites())


def test_exterior_distance_norms():
    box = Box((3, 3))
    assert box.exterior_distance((1, 1)) == 0
    assert box.exterior_distance((4, 1)) == 2
    assert box.exterior_distance((4, 4), norm="sup") == 2
    assert box.exterior_distance((4, 4), norm="euclid") == pytest.approx(2 * 2**0.5)


def test_kernel_requires_symmetry():
    with pytest.raises(ModelError):
        CouplingKernel({(1, 0): 1.0, (-1, 0): 0.5}, dim=2)
    with pytest.raises(ModelError):
        CouplingKernel({(0, 1): 1.0}, dim=2)


def test_kernel_drops_zeros_and_measures_reach():
    k = CouplingKernel({(0, 0): 0.0, (1, 0): 2.0, (-1, 0): 2.0}, dim=2)
    assert (0, 0) not in k.support
    assert k.reach == 1
    assert k.total == 4.0
    assert k[(0, 1)] == 0.0
    assert CouplingKernel.zero(2).reach == 0


def test_kernel_sign_predicates():
    assert CouplingKernel.range1(0.0, 1.0, 2.0).is_nonnegative()
    assert CouplingKernel.range1(0.0, -1.0, -2.0).is_nonpositive()
    mixed = CouplingKernel.range1(0.5, -1.0, 2.0)
    assert not mixed.is_nonnegative() and not mixed.is_nonpositive()


def test_params_reject_nonpositive_beta():
    k = CouplingKernel.range1(0.0, 1.0, 1.0)
    with pytest.raises(ModelError):
        PcaParams(beta=0.0, h=0.0, kernel=k)
    with pytest.raises(ModelError):
        PcaParams(beta=-1.0, h=0.0, kernel=k)


def test_encode_decode_roundtrip_exhaustive():
    box = Box((3, 4))  # 12 sites
    for index in range(2**box.n_sites):
        assert SpinConfig.from_index(box, index).encode() == index


@settings(max_examples=60)
@given(small_boxes, st.integers(0, 2**9 - 1))
def test_encode_decode_roundtrip_random(box, index):
    index %= 2**box.n_sites
    config = SpinConfig.from_index(box, index)
    assert config.encode() == index
    assert set(np.unique(config.spins)) <= {-1, 1}


def test_flip_is_involutive():
    box = Box((2, 2))
    config = SpinConfig.constant(box, 1)
    sites = [(0, 0), (1, 1)]
    assert config.flip(sites).flip(sites).encode() == config.encode()
    assert config.flip(sites).spin_at((0, 0)) == -1
    assert config.flip(sites).spin_at((0, 1)) == 1


def test_extend_uses_boundary_condition():
    box = Box((2, 2))
    config = SpinConfig.constant(box, 1).flip([(0, 0)])
    per = extend(config, Periodic())
    assert per.spin((2, 0)) == config.spin_at((0, 0)) == -1
    fix = extend(config, Fixed({(2, 0): -1}, fill=1))
    assert fix.spin((2, 0)) == -1
    assert fix.spin((5, 5)) == 1
    strict = extend(config, Fixed({}))
    with pytest.raises(BoundarySpinMissing):
        strict.spin((2, 0))


def test_local_field_by_hand():
    # all +1 interior, minus boundary to the east of site (1, 0)
    box = Box((2, 2))
    config = SpinConfig.constant(box, 1)
    params = PcaParams(beta=1.0, h=0.25, kernel=CouplingKernel.range1(0.5, 1.0, 2.0))
    ext = extend(config, Fixed.uniform(-1))
    # k0*1 + k1*(down neighbor in box) + k1*(east boundary) + k2*two in-box
    val = local_field((1, 0), ext, params)
    assert val == pytest.approx(0.25 + 0.5 + 1.0 - 1.0 + 2.0 - 2.0)


def test_sublattices_checkerboard():
    box = Box((3, 3))
    even, odd = sublattices(box)
    assert (0, 0) in even and (0, 1) in odd
    assert len(even) + len(odd) == box.n_sites
    assert all((x + y) % 2 == 0 for x, y in even)
    with pytest.raises(ModelError):
        sublattices(Box((2,)))
