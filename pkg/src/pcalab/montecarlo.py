"""Trajectory sampling and the standard experiments.

Runs are reproducible bit for bit from ``(model, seed)``: every uniform
is addressed by (seed, step, site), so the trajectory is the same no
matter how many workers execute the sweep schedule.  Error bars come
from batch means over at least 20 batches.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    TransitionContext,
    local_field_array,
    plus_prob_values,
    step_sample,
)
from .gibbs import _field_matrix, log_cosh
from .lattice import (
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
)
from .rng import CounterUniforms, counter_uniforms_block, derive_seed

MIN_BATCHES = 20


def magnetization(config: SpinConfig) -> float:
    """Mean spin of the configuration."""
    return float(config.spins.mean())


def energy(config: SpinConfig, ctx: TransitionContext) -> float:
    """Potential energy: -sum_i (beta*h*s_i + log cosh(beta*m_i))."""
    beta, h = ctx.params.beta, ctx.params.h
    fields = local_field_array(config, ctx)
    return float(-(beta * h * config.spins.sum() + log_cosh(beta * fields).sum()))


def batch_means(samples: np.ndarray, n_batches: int = MIN_BATCHES) -> tuple[float, float]:
    """(mean, stderr) by batch means; needs at least n_batches samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < n_batches:
        raise ModelError(
            f"{samples.size} samples cannot form {n_batches} batches"
        )
    usable = samples.size - samples.size % n_batches
    batches = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    stderr = float(batches.std(ddof=1) / np.sqrt(n_batches))
    return float(samples.mean()), stderr


@dataclass(frozen=True)
class ChainRun:
    """One trajectory: per-step observables after burn-in, plus the end state."""

    ctx: TransitionContext
    seed: int
    steps: int
    burnin: int
    magnetizations: np.ndarray
    energies: np.ndarray | None
    final: SpinConfig
    wall_time: float


def run_chain(
    ctx: TransitionContext,
    start: SpinConfig,
    steps: int,
    seed: int,
    burnin: int = 0,
    record_energy: bool = False,
) -> ChainRun:
    """Advance ``burnin + steps`` synchronous updates, recording after burn-in."""
    t0 = time.perf_counter()
    rand = CounterUniforms(seed)
    config = start
    mags = np.empty(steps)
    energies = np.empty(steps) if record_energy else None
    for t in range(burnin + steps):
        config = step_sample(config, ctx, rand, step=t)
        if t >= burnin:
            mags[t - burnin] = magnetization(config)
            if record_energy:
                energies[t - burnin] = energy(config, ctx)
    return ChainRun(
        ctx=ctx,
        seed=seed,
        steps=steps,
        burnin=burnin,
        magnetizations=mags,
        energies=energies,
        final=config,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# experiment records


def kernel_label(kernel: CouplingKernel) -> str:
    """Canonical CSV-safe text form of a kernel, offsets joined by '|'."""
    return "|".join(
        ":".join(str(c) for c in offset) + f"={weight:g}"
        for offset, weight in kernel.weights
    )


@dataclass(frozen=True)
class ExperimentRecord:
    """One estimate with its provenance; maps 1:1 onto a CSV row."""

    beta: float
    h: float
    kernel: str
    bc: str
    lattice: str
    steps: int
    burnin: int
    seed: int
    estimate: float
    stderr: float
    wall_time: float

    CSV_COLUMNS = (
        "beta",
        "h",
        "kernel",
        "bc",
        "lattice",
        "steps",
        "burnin",
        "seed",
        "estimate",
        "stderr",
    )

    def csv_row(self) -> tuple:
        return (
            repr(self.beta),
            repr(self.h),
            self.kernel,
            self.bc,
            self.lattice,
            self.steps,
            self.burnin,
            self.seed,
            repr(self.estimate),
            repr(self.stderr),
        )


def _lattice_label(box: Box) -> str:
    return "x".join(str(s) for s in box.sides)


def _phase_point(task) -> ExperimentRecord:
    beta, h, kernel, box, bc_name, steps, burnin, seed = task
    params = PcaParams(beta, h, kernel)
    value = 1 if bc_name == "plus" else -1
    ctx = TransitionContext(params, box, Fixed.uniform(value))
    start = SpinConfig.constant(box, value)
    run = run_chain(ctx, start, steps, seed, burnin=burnin)
    estimate, stderr = batch_means(run.magnetizations)
    return ExperimentRecord(
        beta=beta,
        h=h,
        kernel=kernel_label(kernel),
        bc=bc_name,
        lattice=_lattice_label(box),
        steps=steps,
        burnin=burnin,
        seed=seed,
        estimate=estimate,
        stderr=stderr,
        wall_time=run.wall_time,
    )


def phase_scan(
    betas,
    kernel: CouplingKernel,
    box: Box,
    steps: int,
    burnin: int,
    seed: int,
    h: float = 0.0,
    bcs: tuple[str, ...] = ("plus", "minus"),
    workers: int = 1,
) -> list[ExperimentRecord]:
    """Magnetization under uniform +1 and -1 boundaries across temperatures.

    Each (beta, bc) point runs an independent chain whose seed derives
    from the base seed and the point index, so results do not depend on
    the worker count, and records are returned in parameter order.
    """
    tasks = []
    for i, beta in enumerate(betas):
        for j, bc_name in enumerate(bcs):
            if bc_name not in ("plus", "minus"):
                raise ModelError(f"phase scan boundary must be plus/minus, got {bc_name}")
            child = derive_seed(seed, i * len(bcs) + j)
            tasks.append((beta, h, kernel, box, bc_name, steps, burnin, child))
    if workers <= 1:
        return [_phase_point(t) for t in tasks]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_phase_point, tasks))


@dataclass(frozen=True)
class NonstationarityResult:
    """Alternation diagnostics for fully negative axis couplings."""

    magnetizations: np.ndarray  # m_0 = start, then one entry per step
    first_step: float
    alternating: bool
    min_abs: float
    checked_steps: int


def nonstationarity_run(
    kernel: CouplingKernel,
    beta: float,
    box: Box,
    steps: int,
    seed: int,
    check_window: int = 100,
) -> NonstationarityResult:
    """Start from all +1 on a torus and track the period-2 flip-flop.

    The kernel must have nonpositive self-coupling and strictly negative
    axis couplings; in that regime a deep quench sends the magnetization
    to nearly -1 in one step and alternates sign afterwards.
    """
    if kernel.dim != 2:
        raise ModelError("alternation experiment is two-dimensional")
    if kernel[(1, 0)] >= 0 or kernel[(0, 1)] >= 0 or kernel[(0, 0)] > 0:
        raise ModelError(
            "alternation regime needs negative axis couplings and k(0) <= 0"
        )
    params = PcaParams(beta, 0.0, kernel)
    ctx = TransitionContext(params, box, Periodic())
    rand = CounterUniforms(seed)
    config = SpinConfig.constant(box, 1)
    mags = [magnetization(config)]
    for t in range(steps):
        config = step_sample(config, ctx, rand, step=t)
        mags.append(magnetization(config))
    mags = np.array(mags)
    window = min(check_window, steps)
    inspected = mags[1 : window + 1]
    alternating = bool(np.all(inspected[:-1] * inspected[1:] < 0)) if window > 1 else False
    return NonstationarityResult(
        magnetizations=mags,
        first_step=float(mags[1]) if steps > 0 else float(mags[0]),
        alternating=alternating,
        min_abs=float(np.abs(inspected).min()) if window > 0 else 0.0,
        checked_steps=window,
    )


# ---------------------------------------------------------------------------
# monotone coupling


def coupled_step(
    pair: tuple[SpinConfig, SpinConfig],
    ctx: TransitionContext,
    rand,
    step: int = 0,
) -> tuple[SpinConfig, SpinConfig]:
    """Advance two configurations with the same uniforms.

    Requires a sign-definite kernel: then the update is monotone (order
    preserved each step for nonnegative kernels, reversed each step for
    nonpositive ones) under this coupling.
    """
    kernel = ctx.params.kernel
    if not (kernel.is_nonnegative() or kernel.is_nonpositive()):
        raise ModelError("monotone coupling needs a sign-definite kernel")
    a, b = pair
    u = rand.site_uniforms(step, a.box.n_sites).reshape(a.box.sides)
    next_a = SpinConfig(a.box, np.where(u < plus_prob_values(ctx.params.beta * local_field_array(a, ctx)), 1, -1).astype(np.int8))
    next_b = SpinConfig(b.box, np.where(u < plus_prob_values(ctx.params.beta * local_field_array(b, ctx)), 1, -1).astype(np.int8))
    return next_a, next_b


@dataclass(frozen=True)
class CoupledRun:
    """Orderedness of a coupled pair at every step."""

    low_magnetizations: np.ndarray
    high_magnetizations: np.ndarray
    ordered: np.ndarray  # +1 low<=high, -1 high<=low, 0 incomparable
    all_ordered: bool


def run_coupled(
    ctx: TransitionContext,
    low: SpinConfig,
    high: SpinConfig,
    steps: int,
    seed: int,
) -> CoupledRun:
    """Track pointwise order of a coupled pair started at low <= high."""
    if not np.all(low.spins <= high.spins):
        raise ModelError("initial pair must satisfy low <= high pointwise")
    alternates = ctx.params.kernel.is_nonpositive() and ctx.params.kernel.weights
    rand = CounterUniforms(seed)
    low_m, high_m, ordered, equal = [], [], [], []
    a, b = low, high
    for t in range(steps):
        a, b = coupled_step((a, b), ctx, rand, step=t)
        low_m.append(magnetization(a))
        high_m.append(magnetization(b))
        le = bool(np.all(a.spins <= b.spins))
        ge = bool(np.all(b.spins <= a.spins))
        ordered.append(1 if le else -1 if ge else 0)
        equal.append(le and ge)
    ordered = np.array(ordered, dtype=np.int8)
    equal = np.array(equal, dtype=bool)
    if alternates:
        expected = np.where(np.arange(1, steps + 1) % 2 == 0, 1, -1)
    else:
        expected = np.ones(steps, dtype=np.int8)
    # a coalesced pair stays coalesced and satisfies either relation
    consistent = equal | (ordered == expected)
    return CoupledRun(
        low_magnetizations=np.array(low_m),
        high_magnetizations=np.array(high_m),
        ordered=ordered,
        all_ordered=bool(np.all(consistent)) if steps else True,
    )


# ---------------------------------------------------------------------------
# long runs on tiny boxes, and text snapshots


def index_trajectory(
    ctx: TransitionContext, start: SpinConfig, steps: int, seed: int
) -> np.ndarray:
    """Config indices visited by the chain (start excluded), small boxes only.

    Produces exactly the trajectory of repeated ``step_sample`` under the
    same seed, but precomputes the 2^n per-state update table and maps
    whole blocks of uniforms at once.
    """
    n = ctx.box.n_sites
    if n > 10:
        raise ModelError("index trajectories limited to 10 sites")
    fields = ctx.params.beta * _field_matrix(ctx.box.sites(), ctx.box, ctx.bc, ctx.params)
    p_plus = plus_prob_values(fields)  # (2^n, n)
    out = np.empty(steps, dtype=np.int64)
    state = start.encode()
    weights = 1 << np.arange(n, dtype=np.int64)
    chunk = max(1, 2**22 // (2**n * n))
    done = 0
    while done < steps:
        block = min(chunk, steps - done)
        u = counter_uniforms_block(seed, done, block, n)
        next_map = (u[:, None, :] < p_plus[None, :, :]) @ weights  # (block, 2^n)
        for t in range(block):
            state = int(next_map[t, state])
            out[done + t] = state
        done += block
    return out


def occupation_counts(
    ctx: TransitionContext, start: SpinConfig, steps: int, seed: int, burnin: int = 0
) -> np.ndarray:
    """Visit counts per config index over a long run after burn-in."""
    states = index_trajectory(ctx, start, burnin + steps, seed)
    return np.bincount(states[burnin:], minlength=2**ctx.box.n_sites)


def snapshot_text(config: SpinConfig) -> str:
    """Text grid of a 2d configuration: rows are x, columns are y."""
    if config.box.dim != 2:
        raise ModelError("snapshots are two-dimensional")
    return "\n".join(
        "".join("+" if s > 0 else "-" for s in row) for row in config.spins
    )


def parse_snapshot(text: str, origin: tuple[int, int] = (0, 0)) -> SpinConfig:
    """Inverse of snapshot_text; accepts '+'/'-' grids, one row per line."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ModelError("snapshot must be a nonempty rectangular +- grid")
    spins = np.empty((len(rows), len(rows[0])), dtype=np.int8)
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            if ch == "+":
                spins[i, j] = 1
            elif ch == "-":
                spins[i, j] = -1
            else:
                raise ModelError(f"snapshot character {ch!r} is not '+' or '-'")
    box = Box(sides=spins.shape, origin=origin)
    return SpinConfig(box, spins)
