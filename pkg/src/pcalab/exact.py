"""Exhaustive-enumeration engine for small boxes.

Everything here works on full probability vectors indexed by the
canonical config encoding, and on dense one-step transition matrices
``P[prev, next]``.  The intent is verification: detailed balance of the
closed-form stationary weights, entropy production identities, the
even/odd sublattice structure, and the behavior of models under the
spin-flip conjugations, all to near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TransitionContext
from .gibbs import (
    ExactSizeError,
    _field_matrix,
    all_spin_matrix,
    log_cosh,
    weight_table,
)
from .lattice import (
    Box,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
    sublattices,
)

STATIONARY_TOL = 1e-14
MAX_POWER_ITERATIONS = 10**6


@dataclass(frozen=True)
class Distribution:
    """Probability vector over all configurations of a box."""

    box: Box
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (2**self.box.n_sites,):
            raise ModelError(
                f"distribution length {p.shape} does not match box ({self.box.n_sites} sites)"
            )
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ModelError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p / p.sum())


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense one-step matrix, rows indexed by the previous configuration."""

    box: Box
    matrix: np.ndarray


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def build_matrix(ctx: TransitionContext) -> TransitionMatrix:
    """Full transition matrix of the parallel dynamics on a small box."""
    n = ctx.box.n_sites
    if n > 20:
        raise ExactSizeError(
            f"{n} sites exceeds the exact enumeration ceiling of 20"
        )
    fields = ctx.params.beta * _field_matrix(ctx.box.sites(), ctx.box, ctx.bc, ctx.params)
    log_plus = -np.logaddexp(0.0, -2.0 * fields)
    log_minus = -np.logaddexp(0.0, 2.0 * fields)
    bits = (all_spin_matrix(n).astype(np.float64) + 1.0) / 2.0
    log_p = log_minus @ (1.0 - bits.T) + log_plus @ bits.T
    return TransitionMatrix(ctx.box, np.exp(log_p))


def stationary_distribution(
    tm: TransitionMatrix,
    start: np.ndarray | None = None,
    tol: float = STATIONARY_TOL,
    max_iterations: int = MAX_POWER_ITERATIONS,
) -> Distribution:
    """Power iteration until the one-step total-variation change <= tol.

    Stopping rule: plain vector iteration first; if the chain mixes too
    slowly for that (metastable low-temperature instances have spectral
    gaps below 1e-6), accelerate by repeatedly squaring the matrix, which
    doubles the effective step count per round.  The result is always
    validated against the original matrix and a failure to meet tol
    raises, never returns a bad vector.
    """
    n_states = tm.matrix.shape[0]
    nu = np.full(n_states, 1.0 / n_states) if start is None else np.asarray(start, float)
    nu = nu / nu.sum()
    for _ in range(min(max_iterations, 20_000)):
        nxt = nu @ tm.matrix
        nxt /= nxt.sum()
        if total_variation(nxt, nu) <= tol:
            return Distribution(tm.box, nxt)
        nu = nxt
    # stalled: square the matrix (2^k steps per squaring) until every row
    # has collapsed onto the stationary vector; the row spread bounds the
    # distance to the limit directly, with no spectral-gap division
    accel = tm.matrix.copy()
    for _ in range(60):
        accel = accel @ accel
        accel /= accel.sum(axis=1, keepdims=True)
        spread = float(np.abs(accel - accel[0]).sum(axis=1).max()) / 2.0
        if spread <= tol:
            nu = accel.mean(axis=0)
            return Distribution(tm.box, nu / nu.sum())
    raise ModelError(
        f"power iteration did not reach tv change {tol}, even after squaring"
    )


def detailed_balance_residual(tm: TransitionMatrix, dist: Distribution) -> float:
    """max |nu(e) P(e, s) - nu(s) P(s, e)| relative to the largest joint entry."""
    joint = tm.matrix * dist.probs[:, None]
    return float(np.abs(joint - joint.T).max() / joint.max())


def relative_entropy(nu, mu) -> float:
    """KL divergence sum nu log(nu/mu) in nats, with 0 log 0 = 0."""
    p = nu.probs if isinstance(nu, Distribution) else np.asarray(nu, float)
    q = mu.probs if isinstance(mu, Distribution) else np.asarray(mu, float)
    support = p > 0
    if np.any(q[support] == 0):
        raise ModelError("relative entropy is infinite: nu charges a null set of mu")
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def backward_kernel(tm: TransitionMatrix, nu: Distribution) -> TransitionMatrix:
    """Time reversal of the chain started from nu.

    Row ``s`` is the conditional law of the previous configuration given
    the current one is ``s``: P(e, s) nu(e) / (nu P)(s).
    """
    forward = nu.probs @ tm.matrix
    if np.any(forward == 0):
        raise ModelError("one-step law has empty support; reversal undefined")
    rev = (tm.matrix * nu.probs[:, None]).T / forward[:, None]
    return TransitionMatrix(tm.box, rev)


def entropy_production(
    nu: Distribution, tm: TransitionMatrix, mu: Distribution
) -> tuple[float, float]:
    """One-step drop of KL(nu_t | mu) and its backward-kernel decomposition.

    ``mu`` must be stationary for the matrix.  Returns ``(drop, decomposition)``
    where drop = KL(nu|mu) - KL(nuP|mu) and the decomposition is the mean
    KL divergence between the backward kernels of nu and of mu; the two
    are equal identically and both nonnegative.
    """
    if total_variation(mu.probs @ tm.matrix, mu.probs) > 1e-10:
        raise ModelError("mu is not stationary for the given matrix")
    nu_next = Distribution(tm.box, nu.probs @ tm.matrix)
    drop = relative_entropy(nu, mu) - relative_entropy(nu_next, mu)
    back_nu = backward_kernel(tm, nu).matrix
    back_mu = backward_kernel(tm, mu).matrix
    weights = nu_next.probs[:, None] * back_nu
    mask = weights > 0
    decomposition = float(
        np.sum(weights[mask] * np.log(back_nu[mask] / back_mu[mask]))
    )
    return drop, decomposition


# ---------------------------------------------------------------------------
# sublattice structure of the stationary measure


def _sublattice_keys(box: Box) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Per-config indices into the even and odd marginal tables."""
    even, odd = sublattices(box)
    codes = np.arange(2**box.n_sites, dtype=np.int64)
    ekey = np.zeros_like(codes)
    okey = np.zeros_like(codes)
    for t, site in enumerate(even):
        ekey |= ((codes >> box.site_index(site)) & 1) << t
    for t, site in enumerate(odd):
        okey |= ((codes >> box.site_index(site)) & 1) << t
    return ekey, okey, len(even), len(odd)


def sublattice_marginals(dist: Distribution) -> tuple[np.ndarray, np.ndarray]:
    """Marginal laws of the even and odd coordinate-parity sublattices."""
    ekey, okey, ne, no = _sublattice_keys(dist.box)
    even = np.bincount(ekey, weights=dist.probs, minlength=2**ne)
    odd = np.bincount(okey, weights=dist.probs, minlength=2**no)
    return even, odd


def sublattice_independence_defect(dist: Distribution) -> float:
    """max |nu - nu_even x nu_odd| over configurations."""
    ekey, okey, _, _ = _sublattice_keys(dist.box)
    even, odd = sublattice_marginals(dist)
    return float(np.abs(dist.probs - even[ekey] * odd[okey]).max())


@dataclass(frozen=True)
class IsingCheckResult:
    marginal_deviation: float
    independence_defect: float


def ising_correspondence_check(
    box: Box, bc: Fixed, params: PcaParams
) -> IsingCheckResult:
    """Compare the stationary measure with the nearest-neighbor Ising picture.

    For a two-dimensional kernel supported on the axis pairs (no
    self-coupling) and h = 0, the even-sublattice marginal of the
    stationary measure must coincide with the even marginal of the
    anisotropic Ising measure over all bonds touching the box, and the
    two sublattices must be independent.  Returns the maximal deviations
    of both statements.

    A self-coupling k(0) != 0 breaks the correspondence; the check still
    runs (the Ising side only ever sees the axis weights) so the size of
    the resulting defect can be measured.
    """
    kernel = params.kernel
    if box.dim != 2:
        raise ModelError("correspondence check needs a two-dimensional box")
    if box.n_sites > 16:
        raise ModelError("correspondence check limited to 16 sites")
    if params.h != 0.0:
        raise ModelError("correspondence check requires h = 0")
    axis = ((1, 0), (-1, 0), (0, 1), (0, -1))
    if any(o != (0, 0) and o not in axis for o in kernel.support):
        raise ModelError("correspondence check requires a range-1 axis kernel")
    if not isinstance(bc, Fixed):
        raise ModelError("correspondence check requires a fixed boundary")

    nu = Distribution(box, weight_table(box, bc, params, "closed_form").probabilities())

    n = box.n_sites
    spins = all_spin_matrix(n).astype(np.float64)
    logw = np.zeros(2**n)
    for i in box.sites():
        si = spins[:, box.site_index(i)]
        for e in ((1, 0), (0, 1)):
            w = kernel[e]
            if w == 0.0:
                continue
            fwd = tuple(c + d for c, d in zip(i, e))
            if fwd in box:
                logw += params.beta * w * si * spins[:, box.site_index(fwd)]
            else:
                logw += params.beta * w * si * bc.lookup(fwd)
            back = tuple(c - d for c, d in zip(i, e))
            if back not in box:
                logw += params.beta * w * si * bc.lookup(back)
    wexp = np.exp(logw - logw.max())
    ising = Distribution(box, wexp / wexp.sum())

    nu_even, _ = sublattice_marginals(nu)
    ising_even, _ = sublattice_marginals(ising)
    return IsingCheckResult(
        marginal_deviation=float(np.abs(nu_even - ising_even).max()),
        independence_defect=sublattice_independence_defect(nu),
    )
