"""Parallel spin-flip dynamics.

All sites update simultaneously and independently: given the previous
configuration ``eta`` (extended by the boundary condition), the next
spin at site ``i`` is ``+1`` with probability

    p_i(+1 | eta) = (1 + tanh(beta * m_i(eta))) / 2,

where ``m_i`` is the local field including the external term ``h``.
The product over sites gives the one-step transition probability.

Probabilities are arranged so that ``p(+1) + p(-1) == 1`` holds exactly
in floating point (the smaller one is computed as the complement of the
larger, which is exact), and ``tanh`` is clamped one ulp inside +-1 so
no transition probability ever degenerates to 0 or 1.  Log-domain
transition probabilities bypass the clamp and stay accurate for fields
far beyond overflow of ``cosh``.
"""

from __future__ import annotations

import numpy as np

from .lattice import (
    BoundarySpinMissing,
    BoundaryCondition,
    Box,
    ExtendedConfig,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    Site,
    SpinConfig,
    local_field,
)

_TANH_CAP = 1.0 - 2.0**-52


class TransitionContext:
    """Model and boundary data prepared for repeated stepping.

    For a fixed boundary condition, every exterior spin the kernel can
    reach from the box is resolved here; a missing one fails
    construction rather than some later step.
    """

    def __init__(self, params: PcaParams, box: Box, bc: BoundaryCondition):
        if params.kernel.dim != box.dim:
            raise ModelError(
                f"kernel dim {params.kernel.dim} != box dim {box.dim}"
            )
        self.params = params
        self.box = box
        self.bc = bc
        self.reach = params.kernel.reach
        self._core = tuple(slice(self.reach, self.reach + s) for s in box.sides)
        self._template = None
        if isinstance(bc, Fixed):
            self._template = self._build_template()

    def _build_template(self) -> np.ndarray:
        r, box = self.reach, self.box
        padded = np.zeros(tuple(s + 2 * r for s in box.sides), dtype=np.int8)
        for site in box.sites():
            for offset, _ in self.params.kernel.weights:
                neighbor = tuple(c + d for c, d in zip(site, offset))
                if neighbor in box:
                    continue
                local = tuple(
                    c - o + r for c, o in zip(neighbor, box.origin)
                )
                padded[local] = self.bc.lookup(neighbor)
        return padded

    def padded_spins(self, config: SpinConfig) -> np.ndarray:
        """Configuration extended to the kernel reach as a padded array."""
        if self.reach == 0:
            return config.spins
        if self._template is None:
            return np.pad(config.spins, self.reach, mode="wrap")
        padded = self._template.copy()
        padded[self._core] = config.spins
        return padded

    @property
    def n_sites(self) -> int:
        return self.box.n_sites


def local_field_array(config: SpinConfig, ctx: TransitionContext) -> np.ndarray:
    """Local fields (kernel sum plus h) at every site, shape ``box.sides``."""
    padded = ctx.padded_spins(config).astype(np.float64)
    fields = np.full(config.box.sides, ctx.params.h, dtype=np.float64)
    r = ctx.reach
    for offset, w in ctx.params.kernel.weights:
        window = tuple(
            slice(r + d, r + d + s) for d, s in zip(offset, config.box.sides)
        )
        fields += w * padded[window]
    return fields


def _half_one_plus_tanh(a):
    """(1 + tanh(a)) / 2 for a >= 0, clamped strictly below 1."""
    t = np.minimum(np.tanh(a), _TANH_CAP)
    return 0.5 * (1.0 + t)


def site_prob(
    spin: int, site: Site, ext: ExtendedConfig, ctx: TransitionContext
) -> float:
    """Probability the next spin at ``site`` equals ``spin``.

    Strictly inside (0, 1), and exactly complementary over the two spin
    values.
    """
    if spin not in (-1, 1):
        raise ModelError(f"spin must be +-1, got {spin}")
    x = ctx.params.beta * local_field(site, ext, ctx.params)
    q = float(_half_one_plus_tanh(abs(x)))
    return q if spin * x >= 0 else 1.0 - q


def plus_prob_values(x) -> np.ndarray:
    """(1 + tanh(x)) / 2 elementwise with the exact-complement arrangement."""
    q = _half_one_plus_tanh(np.abs(x))
    return np.where(np.asarray(x) >= 0, q, 1.0 - q)


def plus_prob_array(config: SpinConfig, ctx: TransitionContext) -> np.ndarray:
    """Per-site probabilities of +1 at the next step, shape ``box.sides``."""
    return plus_prob_values(ctx.params.beta * local_field_array(config, ctx))


def transition_log_prob(
    prev: SpinConfig, nxt: SpinConfig, ctx: TransitionContext
) -> float:
    """log P(nxt | prev), exact in log domain for arbitrarily large fields."""
    if nxt.box != prev.box:
        raise ModelError("configurations live on different boxes")
    x = ctx.params.beta * local_field_array(prev, ctx)
    log_plus = -np.logaddexp(0.0, -2.0 * x)
    log_minus = -np.logaddexp(0.0, 2.0 * x)
    return float(np.sum(np.where(nxt.spins > 0, log_plus, log_minus)))


def step_sample(
    prev: SpinConfig, ctx: TransitionContext, rand, step: int = 0
) -> SpinConfig:
    """Draw one synchronous update using the addressed uniform source.

    ``rand`` provides ``site_uniforms(step, n)``; site ``j`` flips to +1
    exactly when ``u_j < p_j(+1)``.  The previous configuration is not
    modified.
    """
    p_plus = plus_prob_array(prev, ctx)
    u = rand.site_uniforms(step, prev.box.n_sites).reshape(prev.box.sides)
    spins = np.where(u < p_plus, 1, -1).astype(np.int8)
    return SpinConfig(prev.box, spins)
