"""Contour geometry and the low-temperature bound for minus regions.

A configuration on a two-dimensional box (extended by +1 outside) marks
the dual segments separating disagreeing nearest neighbors.  Marked
segments meet each dual vertex an even number of times and decompose
into closed curves once the degree-4 crossings are resolved: at such a
vertex the four surrounding cells alternate in sign, and each incoming
segment is paired with the segment turning around the adjacent minus
cell.  The resulting closed curves never cross themselves, although a
curve may pass through a dual vertex twice (two touching lobes).

Curves whose site boundaries share a site are grouped into classes;
flipping the region enclosed by a class removes exactly that class.
The statistical cost of a curve is controlled by two kernel constants:
``b`` is the field seen from a uniform configuration, ``a`` the largest
field magnitude over mixed-sign neighborhoods, and each boundary site
of a curve replaces a cosh(beta*b) factor by at most cosh(beta*a).

Dual geometry uses doubled integer coordinates: the segment separating
cells (x, y) and (x+1, y) has midpoint (2x+1, 2y); dual vertices have
both coordinates odd.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .gibbs import log_cosh
from .lattice import (
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Site,
    SpinConfig,
    extend,
    local_field,
)

_AXIS_OFFSETS = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True, order=True)
class DualEdge:
    """Unit dual segment identified by its doubled midpoint."""

    mx: int
    my: int

    def __post_init__(self) -> None:
        if (self.mx + self.my) % 2 != 1:
            raise ModelError(f"({self.mx}, {self.my}) is not a segment midpoint")

    @classmethod
    def between(cls, a: Site, b: Site) -> "DualEdge":
        if sum(abs(p - q) for p, q in zip(a, b)) != 1:
            raise ModelError(f"cells {a} and {b} are not nearest neighbors")
        return cls(a[0] + b[0], a[1] + b[1])

    @property
    def cells(self) -> tuple[Site, Site]:
        """The two primal cells the segment separates."""
        if self.mx % 2 == 1:
            return ((self.mx - 1) // 2, self.my // 2), ((self.mx + 1) // 2, self.my // 2)
        return (self.mx // 2, (self.my - 1) // 2), (self.mx // 2, (self.my + 1) // 2)

    @property
    def endpoints(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Doubled coordinates of the two dual vertices."""
        if self.mx % 2 == 1:
            return (self.mx, self.my - 1), (self.mx, self.my + 1)
        return (self.mx - 1, self.my), (self.mx + 1, self.my)


def marked_segments(config: SpinConfig) -> frozenset[DualEdge]:
    """Dual segments separating disagreeing neighbors; exterior is +1."""
    box = config.box
    if box.dim != 2:
        raise ModelError("contour geometry is two-dimensional")
    edges = []
    for i in box.sites():
        si = config.spin_at(i)
        for e in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            j = (i[0] + e[0], i[1] + e[1])
            if j in box:
                if e in ((1, 0), (0, 1)) and si != config.spin_at(j):
                    edges.append(DualEdge.between(i, j))
            elif si != 1:
                edges.append(DualEdge.between(i, j))
    return frozenset(edges)


class _SegmentGeometry:
    """Sign and winding queries answered from a bare segment set."""

    def __init__(self, segments):
        self.vertical_by_row: dict[int, list[int]] = {}
        for edge in segments:
            if edge.mx % 2 == 1:
                self.vertical_by_row.setdefault(edge.my // 2, []).append(edge.mx)
        for xs in self.vertical_by_row.values():
            xs.sort()

    def cell_is_minus(self, cell: Site) -> bool:
        """Ray parity: crossings of vertical segments east of the cell."""
        xs = self.vertical_by_row.get(cell[1], ())
        crossings = sum(1 for mx in xs if mx > 2 * cell[0])
        return crossings % 2 == 1

    def enclosed_cells(self) -> frozenset[Site]:
        cells = set()
        for y, xs in self.vertical_by_row.items():
            for left, right in zip(xs[0::2], xs[1::2]):
                for x in range((left + 1) // 2, (right - 1) // 2 + 1):
                    cells.add((x, y))
        return frozenset(cells)


@dataclass(frozen=True)
class PeierlsContour:
    """One closed curve: edges in traversal order plus its site boundary."""

    edges: tuple[DualEdge, ...]
    boundary_minus: frozenset[Site]
    boundary_plus: frozenset[Site]
    interior: frozenset[Site]

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def boundary(self) -> frozenset[Site]:
        return self.boundary_minus | self.boundary_plus

    def encloses(self, site: Site) -> bool:
        return site in self.interior


def _pair_edge_ends(segments, geometry: _SegmentGeometry):
    """Perfect matching of edge-ends at every dual vertex."""
    at_vertex: dict[tuple[int, int], list[DualEdge]] = {}
    for edge in segments:
        for v in edge.endpoints:
            at_vertex.setdefault(v, []).append(edge)
    pairing: dict[tuple[tuple[int, int], DualEdge], DualEdge] = {}
    for v, incident in at_vertex.items():
        if len(incident) == 2:
            a, b = incident
            pairing[(v, a)] = b
            pairing[(v, b)] = a
        elif len(incident) == 4:
            vx, vy = v
            by_mid = {(e.mx, e.my): e for e in incident}
            north = by_mid[(vx, vy + 1)]
            south = by_mid[(vx, vy - 1)]
            east = by_mid[(vx + 1, vy)]
            west = by_mid[(vx - 1, vy)]
            ne_cell = ((vx + 1) // 2, (vy + 1) // 2)
            if geometry.cell_is_minus(ne_cell):
                pairs = ((north, east), (south, west))
            else:
                pairs = ((north, west), (south, east))
            for a, b in pairs:
                pairing[(v, a)] = b
                pairing[(v, b)] = a
        else:
            raise ModelError(
                f"dual vertex {v} has degree {len(incident)}; not a disagreement set"
            )
    return pairing


def split_into_peierls(segments) -> tuple[PeierlsContour, ...]:
    """Decompose marked segments into closed curves via the corner rule."""
    segments = frozenset(segments)
    if not segments:
        return ()
    geometry = _SegmentGeometry(segments)
    pairing = _pair_edge_ends(segments, geometry)

    contours = []
    seen_ends = set()
    for start in sorted(segments):
        for start_vertex in start.endpoints:
            if (start_vertex, start) in seen_ends:
                continue
            walk = []
            edge, entry = start, start_vertex
            while True:
                seen_ends.add((entry, edge))
                walk.append(edge)
                a, b = edge.endpoints
                exit_vertex = b if entry == a else a
                seen_ends.add((exit_vertex, edge))
                nxt = pairing[(exit_vertex, edge)]
                edge, entry = nxt, exit_vertex
                if edge == start and entry == start_vertex:
                    break
            contours.append(tuple(walk))

    out = []
    for walk in contours:
        own = _SegmentGeometry(walk)
        minus, plus = set(), set()
        for edge in walk:
            for cell in edge.cells:
                if geometry.cell_is_minus(cell):
                    minus.add(cell)
                else:
                    plus.add(cell)
        out.append(
            PeierlsContour(
                edges=walk,
                boundary_minus=frozenset(minus),
                boundary_plus=frozenset(plus),
                interior=own.enclosed_cells(),
            )
        )
    return tuple(sorted(out, key=lambda c: c.edges))


@dataclass(frozen=True)
class ContourClass:
    """Curves chained by shared boundary sites."""

    members: tuple[PeierlsContour, ...]

    @property
    def total_length(self) -> int:
        return sum(c.length for c in self.members)

    @property
    def boundary_minus(self) -> frozenset[Site]:
        return frozenset().union(*(c.boundary_minus for c in self.members))

    @property
    def boundary_plus(self) -> frozenset[Site]:
        return frozenset().union(*(c.boundary_plus for c in self.members))

    @property
    def odd_interior(self) -> frozenset[Site]:
        """Cells enclosed by an odd number of member curves."""
        counts: dict[Site, int] = {}
        for c in self.members:
            for cell in c.interior:
                counts[cell] = counts.get(cell, 0) + 1
        return frozenset(cell for cell, k in counts.items() if k % 2 == 1)


def contour_classes(contours) -> tuple[ContourClass, ...]:
    """Partition curves into classes by transitive boundary contact."""
    contours = list(contours)
    parent = list(range(len(contours)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(contours)), 2):
        if contours[i].boundary & contours[j].boundary:
            parent[find(i)] = find(j)

    groups: dict[int, list[PeierlsContour]] = {}
    for i, c in enumerate(contours):
        groups.setdefault(find(i), []).append(c)
    classes = [
        ContourClass(members=tuple(sorted(g, key=lambda c: c.edges)))
        for g in groups.values()
    ]
    return tuple(sorted(classes, key=lambda cl: cl.members[0].edges))


def minimal_contour_around(
    site: Site, classes
) -> tuple[PeierlsContour, ContourClass]:
    """Innermost curve enclosing a minus site, with its class."""
    all_edges = [e for cl in classes for c in cl.members for e in c.edges]
    if not _SegmentGeometry(all_edges).cell_is_minus(site):
        raise ModelError(f"site {site} carries spin +1; no surrounding curve")
    best = None
    for cl in classes:
        for c in cl.members:
            if c.encloses(site):
                key = (len(c.interior), c.length, c.edges)
                if best is None or key < best[0]:
                    best = (key, c, cl)
    if best is None:
        raise ModelError(f"no curve encloses {site}")
    return best[1], best[2]


# ---------------------------------------------------------------------------
# statistical weight of a curve


def contour_weight(
    contour: PeierlsContour, config: SpinConfig, params: PcaParams
) -> float:
    """Cost factor of a curve relative to the uniform +1 configuration.

    Product over boundary sites of cosh(beta * m_i(sigma)) divided by
    cosh(beta * m_i(+1)); exterior spins are +1.  Defined for h = 0.
    """
    if params.h != 0.0:
        raise ModelError("contour weights are defined for h = 0")
    ext = extend(config, Fixed.uniform(1))
    beta = params.beta
    uniform = params.kernel.total
    log_f = 0.0
    for i in sorted(contour.boundary):
        log_f += float(
            log_cosh(beta * local_field(i, ext, params)) - log_cosh(beta * uniform)
        )
    return math.exp(log_f)


def peierls_constants(kernel: CouplingKernel) -> tuple[float, float]:
    """(a, b): largest mixed-sign field magnitude and the uniform field.

    Requires a two-dimensional kernel supported on the origin and the
    axis unit pairs.  The curve argument contracts when a < b.
    """
    if kernel.dim != 2:
        raise ModelError("curve constants need a two-dimensional kernel")
    if any(o not in _AXIS_OFFSETS for o in kernel.support):
        raise ModelError("curve constants need support within range-1 axis offsets")
    k0, k1, k2 = kernel[(0, 0)], kernel[(1, 0)], kernel[(0, 1)]
    b = kernel.total
    a = 0.0
    for signs in itertools.product((-1, 1), repeat=5):
        if all(s == 1 for s in signs) or all(s == -1 for s in signs):
            continue
        s0, s1, s2, s3, s4 = signs
        a = max(a, abs(k0 * s0 + k1 * (s1 + s2) + k2 * (s3 + s4)))
    return a, b


@dataclass(frozen=True)
class PeierlsBound:
    """Tail bound sum_{l>=4, even} l^3 3^(l-1) ratio^(l/4) over curve lengths.

    ``value`` is None when the series diverges (ratio too close to 1,
    in particular whenever a >= b).
    """

    a: float
    b: float
    beta: float
    ratio: float
    contractive: bool
    value: float | None
    terms: int


def peierls_bound(beta: float, kernel: CouplingKernel, rel_tail: float = 1e-12) -> PeierlsBound:
    """Upper bound on the probability of a minus spin at low temperature."""
    a, b = peierls_constants(kernel)
    log_ratio = float(log_cosh(beta * a) - log_cosh(beta * b))
    ratio = math.exp(log_ratio)
    step_factor = 9.0 * math.exp(log_ratio / 2.0)  # 3^2 * ratio^(2/4) per l += 2
    if a >= b or step_factor >= 1.0:
        return PeierlsBound(a, b, beta, ratio, False, None, 0)
    total = 0.0
    terms = 0
    length = 4
    while True:
        term = math.exp(
            3.0 * math.log(length) + (length - 1) * math.log(3.0) + length / 4.0 * log_ratio
        )
        total += term
        terms += 1
        growth = ((length + 2) / length) ** 3 * step_factor
        if growth < 1.0 and term * growth / (1.0 - growth) <= rel_tail * total:
            return PeierlsBound(a, b, beta, ratio, True, total, terms)
        length += 2


def beta_threshold(
    kernel: CouplingKernel, target: float = 0.5, tol: float = 1e-6
) -> float:
    """Smallest beta at which the curve bound drops below ``target``."""
    a, b = peierls_constants(kernel)
    if a >= b:
        raise ModelError(
            "bound never contracts: mixed-sign fields reach the uniform field"
        )

    def small_enough(beta: float) -> bool:
        result = peierls_bound(beta, kernel)
        return result.contractive and result.value < target

    hi = 1.0
    while not small_enough(hi):
        hi *= 2.0
        if hi > 2**40:
            raise ModelError("no contraction found at any reasonable beta")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if small_enough(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# exhaustive enumeration of curves around the origin


@lru_cache(maxsize=None)
def _polygon_survey(max_length: int) -> dict[int, tuple[int, int]]:
    """For each even length: (translation classes, curves around a fixed cell).

    Enumerates self-avoiding dual polygons once per translation class by
    anchoring the lexicographically least vertex (y before x) at the
    origin, forcing the first step east and the closing step south.  A
    polygon of area A encloses a fixed cell in exactly A of its
    translates, so the per-cell curve count adds the polygon's area.
    """
    counts = {l: [0, 0] for l in range(4, max_length + 1, 2)}
    path = [(0, 0), (1, 0)]
    on_path = {(0, 0), (1, 0)}

    def shoelace_area(vertices) -> int:
        total = 0
        for (x1, y1), (x2, y2) in zip(vertices, vertices[1:] + vertices[:1]):
            total += x1 * y2 - x2 * y1
        return abs(total) // 2

    def walk() -> None:
        x, y = path[-1]
        steps = len(path) - 1
        if (x, y) == (0, 1) and steps + 1 <= max_length and (steps + 1) >= 4:
            length = steps + 1
            if length % 2 == 0:
                area = shoelace_area(path)
                counts[length][0] += 1
                counts[length][1] += area
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if (nx, ny) in on_path:
                continue
            if ny < 0 or (ny == 0 and nx < 0):
                continue
            remaining = max_length - (steps + 1)
            if abs(nx) + abs(ny) > remaining:
                continue
            path.append((nx, ny))
            on_path.add((nx, ny))
            walk()
            on_path.remove((nx, ny))
            path.pop()

    walk()
    return {l: (c[0], c[1]) for l, c in counts.items()}


def enumerate_contours_around_origin(length: int) -> int:
    """Exact count of simple closed dual curves of a given length around a cell."""
    if length > 14:
        raise ModelError("curve enumeration supported up to length 14")
    if length < 4 or length % 2 == 1:
        return 0
    return _polygon_survey(14)[length][1]


def polygon_translation_classes(length: int) -> int:
    """Number of distinct curve shapes (translation classes) of a given length."""
    if length > 14:
        raise ModelError("curve enumeration supported up to length 14")
    if length < 4 or length % 2 == 1:
        return 0
    return _polygon_survey(14)[length][0]
