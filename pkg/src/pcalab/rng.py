"""Counter-based uniform random numbers.

Sampling must be reproducible bit for bit no matter how the per-site
work is scheduled, so randomness is addressed rather than streamed:
the uniform used for site ``j`` at step ``t`` under seed ``s`` is a
pure function of ``(s, t, j)``.  The generator is a 10-round Philox
2x64 block cipher (Salmon et al., SC'11) with the counter set to
``(site, step)`` and the key set to the seed, evaluated vectorized
over sites.
"""

from __future__ import annotations

import numpy as np

PHILOX_MULT = np.uint64(0xD2B74407B1CE6E93)
WEYL = np.uint64(0x9E3779B97F4A7C15)
_MASK32 = np.uint64(0xFFFFFFFF)
_ROUNDS = 10


def _mulhilo(a: np.uint64, b):
    """Full 128-bit product of uint64 operands as (high, low) words."""
    b = np.asarray(b, dtype=np.uint64)
    with np.errstate(over="ignore"):
        a_lo = a & _MASK32
        a_hi = a >> np.uint64(32)
        b_lo = b & _MASK32
        b_hi = b >> np.uint64(32)
        lo = a * b
        t = a_lo * b_hi + ((a_lo * b_lo) >> np.uint64(32))
        carry = ((t & _MASK32) + a_hi * b_lo) >> np.uint64(32)
        hi = a_hi * b_hi + (t >> np.uint64(32)) + carry
    return hi, lo


def _philox2x64(c0, c1, key: np.uint64):
    """Ten Philox rounds on counter words (c0, c1) under a 64-bit key."""
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for _ in range(_ROUNDS):
            hi, lo = _mulhilo(PHILOX_MULT, c0)
            c0, c1 = hi ^ key ^ c1, lo
            key = key + WEYL
    return c0, c1


def _to_uint64(value: int) -> np.uint64:
    return np.uint64(int(value) % (1 << 64))


def counter_uniforms(seed: int, step: int, n: int) -> np.ndarray:
    """Uniforms in [0, 1) for sites ``0..n-1`` at a given step and seed."""
    c0 = np.arange(n, dtype=np.uint64)
    c1 = np.full(n, _to_uint64(step), dtype=np.uint64)
    word, _ = _philox2x64(c0, c1, _to_uint64(seed))
    return (word >> np.uint64(11)).astype(np.float64) * (2.0**-53)


def counter_uniforms_block(
    seed: int, step_start: int, n_steps: int, n_sites: int
) -> np.ndarray:
    """Uniforms for a contiguous run of steps, shape (n_steps, n_sites).

    Row ``t`` equals ``counter_uniforms(seed, step_start + t, n_sites)``
    bit for bit.
    """
    c0 = np.tile(np.arange(n_sites, dtype=np.uint64), n_steps)
    with np.errstate(over="ignore"):
        steps = _to_uint64(step_start) + np.arange(n_steps, dtype=np.uint64)
    c1 = np.repeat(steps, n_sites)
    word, _ = _philox2x64(c0, c1, _to_uint64(seed))
    u = (word >> np.uint64(11)).astype(np.float64) * (2.0**-53)
    return u.reshape(n_steps, n_sites)


def derive_seed(base: int, stream: int) -> int:
    """Deterministic child seed for an indexed substream."""
    word, _ = _philox2x64(
        np.uint64(0x5EEDD0_0D), _to_uint64(stream), _to_uint64(base)
    )
    return int(word)


class CounterUniforms:
    """Addressed uniform source for a whole trajectory under one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def site_uniforms(self, step: int, n: int) -> np.ndarray:
        return counter_uniforms(self.seed, step, n)


class ConstantUniforms:
    """Degenerate source for tests: every uniform equals ``value``."""

    def __init__(self, value: float):
        if not (0.0 <= value < 1.0):
            raise ValueError("constant uniform must lie in [0, 1)")
        self.value = float(value)

    def site_uniforms(self, step: int, n: int) -> np.ndarray:
        return np.full(n, self.value)
