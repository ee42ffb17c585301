import itertools
import math

import numpy as np
import pytest

from pcalab.contours import (
    DualEdge,
    beta_threshold,
    contour_classes,
    contour_weight,
    enumerate_contours_around_origin,
    marked_segments,
    minimal_contour_around,
    peierls_bound,
    peierls_constants,
    polygon_translation_classes,
    split_into_peierls,
)
from pcalab.lattice import Box, CouplingKernel, ModelError, PcaParams, SpinConfig


def flipped(box, minus_cells):
    return SpinConfig.constant(box, 1).flip(minus_cells)


def random_configs(n, sides=(6, 6), seed=0):
    rng = np.random.default_rng(seed)
    box = Box(sides)
    for _ in range(n):
        yield SpinConfig(box, rng.choice([-1, 1], size=sides))


def test_dual_edge_geometry():
    edge = DualEdge.between((1, 1), (1, 2))
    assert set(edge.cells) == {(1, 1), (1, 2)}
    a, b = edge.endpoints
    assert a != b and all(isinstance(c, int) for c in a + b)
    with pytest.raises(ModelError):
        DualEdge.between((0, 0), (1, 1))


def test_single_minus_cell():
    config = flipped(Box((3, 3)), [(1, 1)])
    segments = marked_segments(config)
    assert len(segments) == 4
    (curve,) = split_into_peierls(segments)
    assert curve.length == 4
    assert curve.interior == frozenset({(1, 1)})
    assert curve.boundary_minus == frozenset({(1, 1)})
    assert curve.boundary_plus == frozenset({(0, 1), (2, 1), (1, 0), (1, 2)})
    assert curve.encloses((1, 1)) and not curve.encloses((0, 0))


def test_domino_is_one_curve():
    config = flipped(Box((3, 3)), [(1, 0), (1, 1)])
    (curve,) = split_into_peierls(marked_segments(config))
    assert curve.length == 6
    assert curve.interior == frozenset({(1, 0), (1, 1)})


def test_diagonal_touch_splits_into_two_lobes():
    config = flipped(Box((3, 3)), [(0, 0), (1, 1)])
    curves = split_into_peierls(marked_segments(config))
    assert sorted(c.length for c in curves) == [4, 4]
    assert {frozenset(c.interior) for c in curves} == {
        frozenset({(0, 0)}),
        frozenset({(1, 1)}),
    }
    # lobes share plus boundary sites, so they land in one class
    classes = contour_classes(curves)
    assert len(classes) == 1 and len(classes[0].members) == 2


def test_every_vertex_has_even_degree():
    for config in random_configs(200, seed=5):
        degree = {}
        for edge in marked_segments(config):
            for vertex in edge.endpoints:
                degree[vertex] = degree.get(vertex, 0) + 1
        assert all(d in (2, 4) for d in degree.values())


def test_curves_partition_the_segments():
    for config in random_configs(100, seed=9):
        segments = marked_segments(config)
        curves = split_into_peierls(segments)
        assert sum(c.length for c in curves) == len(segments)
        seen = set()
        for c in curves:
            assert not (seen & set(c.edges))
            seen |= set(c.edges)
        assert seen == set(segments)


def test_length_bounded_by_interior():
    for config in random_configs(80, seed=13):
        for curve in split_into_peierls(marked_segments(config)):
            assert curve.length <= 4 * len(curve.interior)


def test_census_of_a_hand_built_landscape():
    box = Box((10, 10))
    minus = [
        (0, 0), (1, 1), (2, 2), (3, 3),  # diagonal chain of four
        (7, 0), (8, 1),                  # chain of two
        (0, 7), (1, 8), (2, 9),          # chain of three
        (7, 7), (9, 4), (4, 6),          # isolated cells
    ]
    config = flipped(box, minus)
    curves = split_into_peierls(marked_segments(config))
    assert len(curves) == 12
    assert all(c.length == 4 for c in curves)
    classes = contour_classes(curves)
    assert sorted((len(cl.members) for cl in classes), reverse=True) == [4, 3, 2, 1, 1, 1]
    curve, cls = minimal_contour_around((0, 0), classes)
    assert curve.length == 4
    assert curve.interior == frozenset({(0, 0)})
    assert len(cls.members) == 4
    assert cls.odd_interior >= frozenset({(0, 0), (1, 1), (2, 2), (3, 3)})


def test_minimal_contour_requires_a_minus_site():
    config = flipped(Box((4, 4)), [(1, 1)])
    classes = contour_classes(split_into_peierls(marked_segments(config)))
    with pytest.raises(ModelError):
        minimal_contour_around((0, 0), classes)


def test_single_cell_weight_closed_form():
    # one minus island with unit couplings: five boundary sites, each with
    # a mixed field of 3 against a uniform field of 5
    box = Box((5, 5))
    config = flipped(box, [(2, 2)])
    params = PcaParams(beta=1.0, h=0.0, kernel=CouplingKernel.range1(1.0, 1.0, 1.0))
    (curve,) = split_into_peierls(marked_segments(config))
    expected = (math.cosh(3.0) / math.cosh(5.0)) ** 5
    value = contour_weight(curve, config, params)
    assert value == pytest.approx(expected, rel=1e-12)
    assert value == pytest.approx(4.5953e-5, rel=1e-4)


def test_contour_weight_requires_zero_field():
    box = Box((4, 4))
    config = flipped(box, [(1, 1)])
    (curve,) = split_into_peierls(marked_segments(config))
    params = PcaParams(beta=1.0, h=0.2, kernel=CouplingKernel.range1(1.0, 1.0, 1.0))
    with pytest.raises(ModelError):
        contour_weight(curve, config, params)


# curve counting --------------------------------------------------------------


def polyomino_oracle(length):
    """Count curves of given length around the origin cell, by polyominoes.

    A curve around the origin is the boundary of an edge-connected,
    hole-free cell cluster containing (0, 0); below area 7 every cluster
    is hole-free and pinch-free, so boundaries are simple cycles and the
    perimeter equals the curve length.
    """
    area_max = (length // 4) * ((length + 2) // 4)
    count = 0
    window = range(-area_max, area_max + 1)
    cells_pool = [c for c in itertools.product(window, repeat=2) if c != (0, 0)]
    for extra in range(area_max):
        for rest in itertools.combinations(cells_pool, extra):
            cluster = {(0, 0), *rest}
            if perimeter(cluster) != length:
                continue
            if connected(cluster):
                count += 1
    return count


def perimeter(cluster):
    total = 0
    for x, y in cluster:
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nb not in cluster:
                total += 1
    return total


def connected(cluster):
    todo = [next(iter(cluster))]
    seen = set(todo)
    while todo:
        x, y = todo.pop()
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nb in cluster and nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return len(seen) == len(cluster)


@pytest.mark.parametrize("length,expected", [(4, 1), (6, 4), (8, 22)])
def test_counts_around_origin(length, expected):
    assert enumerate_contours_around_origin(length) == expected
    assert polyomino_oracle(length) == expected


def test_translation_classes_match_known_sequence():
    # polygons of perimeter 4, 6, 8 up to translation
    assert [polygon_translation_classes(l) for l in (4, 6, 8)] == [1, 2, 7]


def test_counts_below_coarse_bound():
    for length in (4, 6, 8, 10, 12):
        assert enumerate_contours_around_origin(length) <= length**3 * 3 ** (length - 1)


# contractivity constants ------------------------------------------------------


def test_constants_for_unit_couplings():
    assert peierls_constants(CouplingKernel.range1(1.0, 1.0, 1.0)) == (3.0, 5.0)
    assert peierls_constants(CouplingKernel.range1(2.0, 1.0, 1.0)) == (4.0, 6.0)
    # without self-coupling the best mixed field ties the uniform one
    assert peierls_constants(CouplingKernel.range1(0.0, 1.0, 1.0)) == (4.0, 4.0)


def test_bound_value_and_divergence():
    kernel = CouplingKernel.range1(1.0, 1.0, 1.0)
    at2 = peierls_bound(2.0, kernel)
    assert at2.ratio == pytest.approx(math.cosh(6.0) / math.cosh(10.0), rel=1e-12)
    assert at2.ratio == pytest.approx(1.83157513862e-2, rel=1e-9)
    assert not at2.contractive and at2.value is None
    at5 = peierls_bound(5.0, kernel)
    assert at5.contractive and 0.0 < at5.value < 0.5
    assert at5.terms >= 1
    # independent summation of the same series
    expected, length = 0.0, 4
    while True:
        term = length**3 * 3.0 ** (length - 1) * at5.ratio ** (length / 4)
        expected += term
        if term < 1e-18 * expected:
            break
        length += 2
    assert at5.value == pytest.approx(expected, rel=1e-9)


def test_no_self_coupling_is_never_contractive():
    kernel = CouplingKernel.range1(0.0, 1.0, 1.0)
    for beta in (0.5, 2.0, 10.0):
        assert not peierls_bound(beta, kernel).contractive
    with pytest.raises(ModelError):
        beta_threshold(kernel)


def test_threshold_is_sharp_to_tolerance():
    kernel = CouplingKernel.range1(1.0, 1.0, 1.0)
    star = beta_threshold(kernel, target=0.5, tol=1e-6)
    assert star == pytest.approx(4.2988910675, abs=1e-5)
    above = peierls_bound(star + 1e-6, kernel)
    assert above.contractive and above.value < 0.5
    below = peierls_bound(star - 1e-5, kernel)
    assert (not below.contractive) or below.value >= 0.5
