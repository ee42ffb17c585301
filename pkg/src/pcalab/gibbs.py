"""Potential, closed-form stationary weights and Gibbs weight tables.

The dynamics admits an explicitly known reversible measure.  Its
unnormalized weight factorizes over sites:

    w(sigma) = prod_i exp(beta*h*sigma_i)
               * cosh(beta * m_i(sigma~))
               * exp(beta * sigma_i * ext_i),

where ``m_i`` is the local field of the extended configuration and
``ext_i`` collects the kernel mass reaching site ``i`` from the frozen
exterior.  The same measure is Gibbsian for the potential with
singleton terms ``-beta*h*sigma_i`` and neighborhood terms
``-log cosh(beta * m_i)``; this module exposes both routes so they can
be cross-checked numerically.

Two involutive spin-flip transformations connect models whose kernels
differ by a sign: negating the self-coupling k(0) conjugates the
dynamics with a checkerboard flip, and negating an axis pair k(+-e_a)
conjugates it with a flip of alternate slabs along that axis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .lattice import (
    BoundaryCondition,
    Box,
    CouplingKernel,
    ExtendedConfig,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    Site,
    SpinConfig,
    extend,
    local_field,
)

EXACT_SITE_CEILING = 20


class ExactSizeError(ModelError):
    """Raised when exhaustive enumeration is requested beyond the ceiling."""


def log_cosh(x):
    """log(cosh(x)), overflow-free for large |x|."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def all_spin_matrix(n: int) -> np.ndarray:
    """Matrix of all 2^n configurations, row c = spins of config index c."""
    if n > EXACT_SITE_CEILING:
        raise ExactSizeError(
            f"{n} sites exceeds the exact enumeration ceiling of {EXACT_SITE_CEILING}"
        )
    codes = np.arange(2**n, dtype=np.uint32)[:, None]
    bits = (codes >> np.arange(n, dtype=np.uint32)) & 1
    return (2 * bits - 1).astype(np.int8)


# ---------------------------------------------------------------------------
# potential and hamiltonian


@dataclass(frozen=True)
class Potential:
    """Interaction potential of the reversible measure.

    Nonzero terms: a singleton term per site and one term per kernel
    neighborhood ``U_i = {j : k(i - j) != 0}``.
    """

    params: PcaParams

    def singleton_term(self, spin: int) -> float:
        return -self.params.beta * self.params.h * spin

    def neighborhood(self, site: Site) -> tuple[Site, ...]:
        return tuple(
            tuple(c + d for c, d in zip(site, o))
            for o in self.params.kernel.support
        )

    def neighborhood_term(self, site: Site, ext: ExtendedConfig) -> float:
        return -float(log_cosh(self.params.beta * local_field(site, ext, self.params)))


def _interacting_sites(box: Box, kernel: CouplingKernel) -> tuple[Site, ...]:
    """Sites whose kernel neighborhood meets the box."""
    if not kernel.weights:
        return ()
    seen = set()
    for j in box.sites():
        for o in kernel.support:
            seen.add(tuple(c - d for c, d in zip(j, o)))
    return tuple(sorted(seen))


def hamiltonian(config: SpinConfig, bc: BoundaryCondition, params: PcaParams) -> float:
    """Energy of the configuration: sum of all potential terms meeting the box.

    With a fixed boundary this reads exterior spins up to twice the
    kernel reach; a missing one raises.
    """
    pot = Potential(params)
    ext = extend(config, bc)
    total = sum(pot.singleton_term(config.spin_at(i)) for i in config.box.sites())
    if isinstance(bc, Periodic):
        sites = config.box.sites() if params.kernel.weights else ()
    else:
        sites = _interacting_sites(config.box, params.kernel)
    total += sum(pot.neighborhood_term(i, ext) for i in sites)
    return float(total)


# ---------------------------------------------------------------------------
# closed-form stationary weights


def _exterior_field(site: Site, box: Box, bc: Fixed, kernel: CouplingKernel) -> float:
    """Kernel mass reaching ``site`` from the frozen exterior."""
    total = 0.0
    for o, w in kernel.weights:
        j = tuple(c + d for c, d in zip(site, o))
        if j not in box:
            total += w * bc.lookup(j)
    return total


def stationary_log_weight(config: SpinConfig, bc: Fixed, params: PcaParams) -> float:
    """Log of the unnormalized reversible weight under a fixed boundary."""
    if not isinstance(bc, Fixed):
        raise ModelError("fixed boundary required; use periodic_stationary_weight")
    beta, h = params.beta, params.h
    ext = extend(config, bc)
    total = 0.0
    for i in config.box.sites():
        s = config.spin_at(i)
        m = local_field(i, ext, params)
        total += beta * h * s + float(log_cosh(beta * m))
        total += beta * s * _exterior_field(i, config.box, bc, params.kernel)
    return total


def stationary_weight(config: SpinConfig, bc: Fixed, params: PcaParams) -> float:
    """Unnormalized reversible weight; strictly positive."""
    return math.exp(stationary_log_weight(config, bc, params))


def periodic_stationary_log_weight(config: SpinConfig, params: PcaParams) -> float:
    """Log reversible weight with periodic wrapping (no exterior term)."""
    beta, h = params.beta, params.h
    ext = extend(config, Periodic())
    total = 0.0
    for i in config.box.sites():
        m = local_field(i, ext, params)
        total += beta * h * config.spin_at(i) + float(log_cosh(beta * m))
    return total


def periodic_stationary_weight(config: SpinConfig, params: PcaParams) -> float:
    return math.exp(periodic_stationary_log_weight(config, params))


# ---------------------------------------------------------------------------
# vectorized weight tables


def _field_matrix(
    sites_out, box: Box, bc: BoundaryCondition, params: PcaParams
) -> np.ndarray:
    """Fields m_i at the given sites for every configuration.

    Returns shape ``(2**n, len(sites_out))``; column order follows
    ``sites_out``.
    """
    n = box.n_sites
    spins = all_spin_matrix(n).astype(np.float64)
    weights = np.zeros((n, len(sites_out)))
    const = np.full(len(sites_out), params.h)
    periodic = isinstance(bc, Periodic)
    for col, i in enumerate(sites_out):
        for o, w in params.kernel.weights:
            j = tuple(c + d for c, d in zip(i, o))
            if periodic:
                weights[box.site_index(box.wrap(j)), col] += w
            elif j in box:
                weights[box.site_index(j), col] += w
            else:
                const[col] += w * bc.lookup(j)
    return spins @ weights + const


@dataclass(frozen=True)
class WeightTable:
    """Unnormalized log-weights for every configuration of a box."""

    box: Box
    log_weights: np.ndarray

    def probabilities(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def write_csv(self, path, provenance: dict | None = None) -> None:
        probs = self.probabilities()
        with open(path, "w", newline="") as fh:
            for key, value in (provenance or {}).items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh)
            writer.writerow(["config_index", "probability"])
            for idx, p in enumerate(probs):
                writer.writerow([idx, repr(float(p))])


def weight_table(
    box: Box, bc: BoundaryCondition, params: PcaParams, route: str = "closed_form"
) -> WeightTable:
    """Build the full weight table by one of three routes.

    ``closed_form``  the explicit reversible weight (periodic or fixed);
    ``hamiltonian``  exp(-H) from the potential;
    ``product``      the per-site product form of the Gibbs measure over
                     the closure of the box (cosh factor at every site
                     within kernel reach).

    Under periodic wrapping all three coincide; under a fixed boundary
    the latter two coincide with each other but generally not with the
    closed form, whose exterior factors tilt the boundary sites.
    """
    n = box.n_sites
    spins = all_spin_matrix(n).astype(np.float64)
    beta, h = params.beta, params.h
    periodic = isinstance(bc, Periodic)
    if route == "closed_form":
        fields = _field_matrix(box.sites(), box, bc, params)
        logw = beta * h * spins.sum(axis=1) + log_cosh(beta * fields).sum(axis=1)
        if not periodic:
            ext = np.array(
                [_exterior_field(i, box, bc, params.kernel) for i in box.sites()]
            )
            logw += beta * (spins @ ext)
    elif route == "hamiltonian":
        if periodic:
            sites = box.sites() if params.kernel.weights else ()
        else:
            sites = _interacting_sites(box, params.kernel)
        fields = _field_matrix(sites, box, bc, params)
        logw = beta * h * spins.sum(axis=1) + log_cosh(beta * fields).sum(axis=1)
    elif route == "product":
        if periodic:
            sites = box.sites()
            tau_const = 0.0
        else:
            sites = box.closure(params.kernel.reach)
            tau_const = sum(
                beta * h * bc.lookup(i) for i in box.exterior_closure(params.kernel.reach)
            )
        fields = _field_matrix(sites, box, bc, params)
        logw = (
            beta * h * spins.sum(axis=1)
            + log_cosh(beta * fields).sum(axis=1)
            + tau_const
        )
    else:
        raise ModelError(f"unknown weight table route {route!r}")
    return WeightTable(box, logw)


# ---------------------------------------------------------------------------
# sublattice spin-flip transformations


@dataclass(frozen=True)
class SpinFlip:
    """Deterministic involution flipping sites of odd ``coeffs . site``."""

    coeffs: tuple[int, ...]

    def flips(self, site: Site) -> bool:
        return sum(c * x for c, x in zip(self.coeffs, site)) % 2 == 1

    def flip_mask(self, box: Box) -> np.ndarray:
        """Boolean array over the box, True where the spin is negated."""
        mask = np.zeros(box.sides, dtype=bool)
        for site in box.sites():
            local = tuple(c - o for c, o in zip(site, box.origin))
            mask[local] = self.flips(site)
        return mask

    def apply(self, config: SpinConfig) -> SpinConfig:
        mask = self.flip_mask(config.box)
        return SpinConfig(config.box, np.where(mask, -config.spins, config.spins))

    def apply_bc(
        self, bc: BoundaryCondition, box: Box, reach: int
    ) -> BoundaryCondition:
        """Transform a boundary condition alongside the configuration.

        Fixed exteriors are materialized (and flipped) on the closure of
        the box out to ``reach``.  Periodic wrapping is only compatible
        when the flip pattern is itself periodic on the box.
        """
        if isinstance(bc, Periodic):
            for c, s in zip(self.coeffs, box.sides):
                if (c * s) % 2 != 0:
                    raise ModelError(
                        "flip pattern does not wrap on odd side of the box"
                    )
            return Periodic()
        flipped = {}
        for site in box.exterior_closure(reach):
            value = bc.lookup(site)
            flipped[site] = -value if self.flips(site) else value
        return Fixed(flipped)

    def index_permutation(self, box: Box) -> np.ndarray:
        """Induced permutation of canonical config indices (an XOR mask)."""
        mask = 0
        for j, site in enumerate(box.sites()):
            if self.flips(site):
                mask |= 1 << j
        return np.arange(2**box.n_sites, dtype=np.int64) ^ mask


def transform_model(params: PcaParams, which: Site) -> tuple[PcaParams, SpinFlip]:
    """Negate one kernel coupling and return the compensating spin flip.

    ``which`` is the zero offset (negate the self-coupling, compensate
    with a checkerboard flip) or a unit vector e_a (negate the +-e_a
    pair, compensate by flipping alternate slabs along axis a).  The
    conjugation identity holds for h = 0 only, so a nonzero external
    field is rejected.
    """
    if params.h != 0.0:
        raise ModelError("spin-flip conjugation requires h = 0")
    which = tuple(int(c) for c in which)
    kernel = params.kernel
    if len(which) != kernel.dim:
        raise ModelError(f"offset {which} does not match kernel dim {kernel.dim}")
    new = kernel.as_dict()
    if all(c == 0 for c in which):
        if kernel[which] == 0.0:
            raise ModelError("self-coupling is zero; nothing to negate")
        new[which] = -new[which]
        coeffs = (1,) * kernel.dim
    elif sum(abs(c) for c in which) == 1:
        neg = tuple(-c for c in which)
        if kernel[which] == 0.0:
            raise ModelError(f"coupling at {which} is zero; nothing to negate")
        new[which] = -new[which]
        new[neg] = -new[neg]
        coeffs = tuple(abs(c) for c in which)
    else:
        raise ModelError("offset must be zero or a unit vector")
    flipped = PcaParams(params.beta, params.h, CouplingKernel(new, dim=kernel.dim))
    return flipped, SpinFlip(coeffs)
