"""Finite spin lattices, coupling kernels and boundary conditions.

A model lives on a finite box of Z^d.  Spins take values in {-1, +1}.
The local interaction is a finitely supported symmetric kernel
``k: Z^d -> R`` with ``k(o) == k(-o)``; the local field at a site ``i``
for a configuration ``sigma`` (extended outside the box by a boundary
condition) is ``sum_o k(o) * sigma(i + o) + h``.

Site order is canonical throughout the package: sites of a box are
enumerated in lexicographic order of their coordinates, and a
configuration on ``n`` sites is encoded as the integer whose bit ``j``
is ``(sigma_j + 1) / 2`` for the j-th site in that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

Site = tuple[int, ...]


class ModelError(ValueError):
    """Raised for inconsistent model definitions."""


class BoundarySpinMissing(ModelError):
    """Raised when a fixed boundary condition lacks a required exterior spin."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned finite box ``prod_c [origin_c, origin_c + sides_c)``."""

    sides: tuple[int, ...]
    origin: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        sides = tuple(int(s) for s in self.sides)
        if not sides or any(s < 1 for s in sides):
            raise ModelError(f"box sides must be positive, got {self.sides}")
        origin = tuple(int(c) for c in self.origin) if self.origin else (0,) * len(sides)
        if len(origin) != len(sides):
            raise ModelError("origin and sides dimension mismatch")
        object.__setattr__(self, "sides", sides)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def n_sites(self) -> int:
        n = 1
        for s in self.sides:
            n *= s
        return n

    def sites(self) -> tuple[Site, ...]:
        """All sites in lexicographic coordinate order (the canonical order)."""
        ranges = [range(o, o + s) for o, s in zip(self.origin, self.sides)]
        return tuple(itertools.product(*ranges))

    def site_index(self, site: Site) -> int:
        """Canonical index of an interior site."""
        idx = 0
        for c, o, s in zip(site, self.origin, self.sides):
            if not (o <= c < o + s):
                raise ModelError(f"site {site} outside box")
            idx = idx * s + (c - o)
        return idx

    def __contains__(self, site: Site) -> bool:
        return len(site) == self.dim and all(
            o <= c < o + s for c, o, s in zip(site, self.origin, self.sides)
        )

    def wrap(self, site: Site) -> Site:
        """Map an arbitrary site into the box by periodic wrapping."""
        return tuple(
            (c - o) % s + o for c, o, s in zip(site, self.origin, self.sides)
        )

    def exterior_distance(self, site: Site, norm: str = "sup") -> float:
        """Distance from a site to the box (0 for interior sites)."""
        gaps = [
            max(0, o - c, c - (o + s - 1))
            for c, o, s in zip(site, self.origin, self.sides)
        ]
        if norm == "sup":
            return float(max(gaps))
        if norm == "euclid":
            return float(np.sqrt(sum(g * g for g in gaps)))
        raise ModelError(f"unknown norm {norm!r}")

    def closure(self, m: int, norm: str = "sup") -> tuple[Site, ...]:
        """Sites within distance ``m`` of the box, interior included."""
        ranges = [range(o - m, o + s + m) for o, s in zip(self.origin, self.sides)]
        return tuple(
            site
            for site in itertools.product(*ranges)
            if self.exterior_distance(site, norm) <= m
        )

    def exterior_closure(self, m: int, norm: str = "sup") -> tuple[Site, ...]:
        """Exterior sites within distance ``m`` of the box."""
        return tuple(s for s in self.closure(m, norm) if s not in self)


@dataclass(frozen=True)
class CouplingKernel:
    """Finitely supported symmetric interaction kernel on Z^d.

    ``weights`` maps offsets to coupling strengths.  Zero entries are
    dropped; construction fails if ``k(o) != k(-o)`` for any offset.
    """

    weights: tuple[tuple[Site, float], ...]
    dim: int

    def __init__(self, weights, dim: int | None = None):
        items = dict(weights)
        dims = {len(o) for o in items}
        if dims and len(dims) > 1:
            raise ModelError(f"mixed offset dimensions {dims}")
        if dim is None:
            if not dims:
                raise ModelError("empty kernel needs an explicit dim")
            dim = dims.pop()
        elif dims and dims != {dim}:
            raise ModelError("offset dimension does not match dim")
        cleaned = {tuple(int(c) for c in o): float(w) for o, w in items.items() if w != 0.0}
        for o, w in cleaned.items():
            neg = tuple(-c for c in o)
            if cleaned.get(neg) != w:
                raise ModelError(f"kernel not symmetric at offset {o}: {w} vs {cleaned.get(neg)}")
        ordered = tuple(sorted(cleaned.items()))
        object.__setattr__(self, "weights", ordered)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def zero(cls, dim: int) -> "CouplingKernel":
        return cls({}, dim=dim)

    @classmethod
    def range1(cls, k0: float, k1: float, k2: float) -> "CouplingKernel":
        """Two-dimensional kernel on {0, +-e1, +-e2}."""
        return cls(
            {(0, 0): k0, (1, 0): k1, (-1, 0): k1, (0, 1): k2, (0, -1): k2}, dim=2
        )

    @property
    def support(self) -> tuple[Site, ...]:
        return tuple(o for o, _ in self.weights)

    @property
    def reach(self) -> int:
        """Sup-norm radius of the support."""
        return max((max(abs(c) for c in o) for o, _ in self.weights), default=0)

    @property
    def total(self) -> float:
        """Sum of all weights; the field seen from an all +1 configuration."""
        return float(sum(w for _, w in self.weights))

    def __getitem__(self, offset: Site) -> float:
        return dict(self.weights).get(tuple(offset), 0.0)

    def is_nonnegative(self) -> bool:
        return all(w >= 0 for _, w in self.weights)

    def is_nonpositive(self) -> bool:
        return all(w <= 0 for _, w in self.weights)

    def as_dict(self) -> dict[Site, float]:
        return dict(self.weights)


@dataclass(frozen=True)
class PcaParams:
    """Inverse temperature, external field and interaction kernel."""

    beta: float
    h: float
    kernel: CouplingKernel

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ModelError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class Periodic:
    """Periodic wrapping: exterior sites are read modulo the box sides."""


@dataclass(frozen=True, eq=False)
class Fixed:
    """Frozen exterior spins.

    ``spins`` supplies values for individual exterior sites; ``fill``
    (if set) is used for any exterior site not listed.  Lookup of an
    uncovered site raises :class:`BoundarySpinMissing`.
    """

    spins: dict[Site, int] = field(default_factory=dict)
    fill: int | None = None

    def __post_init__(self) -> None:
        for site, s in self.spins.items():
            if s not in (-1, 1):
                raise ModelError(f"boundary spin at {site} must be +-1, got {s}")
        if self.fill is not None and self.fill not in (-1, 1):
            raise ModelError(f"boundary fill must be +-1, got {self.fill}")

    @classmethod
    def uniform(cls, value: int) -> "Fixed":
        return cls(fill=value)

    def lookup(self, site: Site) -> int:
        s = self.spins.get(site)
        if s is not None:
            return s
        if self.fill is not None:
            return self.fill
        raise BoundarySpinMissing(f"no boundary spin supplied for exterior site {site}")


BoundaryCondition = Periodic | Fixed


class SpinConfig:
    """Immutable +-1 configuration on a box.

    The spin array has shape ``box.sides``; flattening it in C order
    matches the canonical site order.
    """

    __slots__ = ("box", "spins")

    def __init__(self, box: Box, spins: np.ndarray):
        arr = np.asarray(spins, dtype=np.int8)
        if arr.shape != box.sides:
            raise ModelError(f"spin array shape {arr.shape} != box sides {box.sides}")
        if not np.all(np.abs(arr) == 1):
            raise ModelError("spins must be +-1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "spins", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpinConfig is immutable")

    @classmethod
    def constant(cls, box: Box, value: int) -> "SpinConfig":
        return cls(box, np.full(box.sides, value, dtype=np.int8))

    @classmethod
    def from_index(cls, box: Box, index: int) -> "SpinConfig":
        n = box.n_sites
        if not (0 <= index < 2**n):
            raise ModelError(f"config index {index} out of range for {n} sites")
        bits = (index >> np.arange(n, dtype=np.uint64)) & 1
        return cls(box, (2 * bits.astype(np.int8) - 1).reshape(box.sides))

    def encode(self) -> int:
        """Canonical integer encoding: bit j is (spin_j + 1) / 2."""
        bits = (self.spins.reshape(-1).astype(np.int64) + 1) // 2
        return int(np.sum(bits << np.arange(self.box.n_sites, dtype=np.int64)))

    def spin_at(self, site: Site) -> int:
        local = tuple(c - o for c, o in zip(site, self.box.origin))
        return int(self.spins[local])

    def flip(self, sites) -> "SpinConfig":
        """New configuration with the given sites negated."""
        arr = self.spins.copy()
        for site in sites:
            local = tuple(c - o for c, o in zip(site, self.box.origin))
            arr[local] = -arr[local]
        return SpinConfig(self.box, arr)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpinConfig)
            and self.box == other.box
            and np.array_equal(self.spins, other.spins)
        )

    def __repr__(self) -> str:
        return f"SpinConfig(box={self.box!r}, index={self.encode()})"


class ExtendedConfig:
    """Total spin lookup: interior from a config, exterior from a boundary rule."""

    __slots__ = ("config", "bc")

    def __init__(self, config: SpinConfig, bc: BoundaryCondition):
        self.config = config
        self.bc = bc

    def spin(self, site: Site) -> int:
        box = self.config.box
        if site in box:
            return self.config.spin_at(site)
        if isinstance(self.bc, Periodic):
            return self.config.spin_at(box.wrap(site))
        return self.bc.lookup(site)


def extend(config: SpinConfig, bc: BoundaryCondition) -> ExtendedConfig:
    """Extend a configuration beyond its box using a boundary condition."""
    return ExtendedConfig(config, bc)


def local_field(site: Site, ext: ExtendedConfig, params: PcaParams) -> float:
    """Interaction field ``sum_o k(o) * sigma(site + o) + h`` at a site."""
    total = params.h
    for offset, w in params.kernel.weights:
        neighbor = tuple(c + d for c, d in zip(site, offset))
        total += w * ext.spin(neighbor)
    return total


def sublattices(box: Box) -> tuple[tuple[Site, ...], tuple[Site, ...]]:
    """Partition a two-dimensional box by coordinate-sum parity.

    Returns ``(even, odd)``, each in canonical site order.
    """
    if box.dim != 2:
        raise ModelError(f"sublattice split needs dim 2, got dim {box.dim}")
    even = tuple(s for s in box.sites() if (s[0] + s[1]) % 2 == 0)
    odd = tuple(s for s in box.sites() if (s[0] + s[1]) % 2 == 1)
    return even, odd
