"""Exact consistency checks runnable on any small instance.

Each check computes a residual that must vanish up to numerical noise:
transition rows summing to one, detailed balance and stationarity of
the closed-form weights, agreement of the two Gibbs routes, the
periodic product identity, the entropy production decomposition, Bayes
involution of the backward kernel, the sublattice correspondence, and
the spin-flip conjugations.  The same battery backs the command line
verifier and the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TransitionContext
from .exact import (
    Distribution,
    backward_kernel,
    build_matrix,
    detailed_balance_residual,
    entropy_production,
    ising_correspondence_check,
    stationary_distribution,
    total_variation,
)
from .gibbs import transform_model, weight_table
from .lattice import (
    BoundaryCondition,
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
    SpinConfig,
)
from .rng import derive_seed

DEFAULT_SITE_CEILING = 12


@dataclass(frozen=True)
class CheckResult:
    check: str
    instance: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def instance_label(box: Box, bc_name: str, params: PcaParams) -> str:
    sides = "x".join(str(s) for s in box.sides)
    return f"{sides}:{bc_name}:beta={params.beta:g}:h={params.h:g}"


def random_instance(seed: int, rng=None):
    """A random small model: box up to 3x3, range-1 kernel, any boundary.

    Returns ``(box, bc, bc_name, params)``.  Fixed boundaries come
    materialized out to twice the kernel reach so every check can run.
    """
    rng = rng or np.random.default_rng(seed)
    sides = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    box = Box(sides)
    weights = rng.uniform(-1.0, 1.0, size=3)
    kernel = CouplingKernel.range1(*weights)
    beta = float(rng.uniform(0.05, 2.0))
    h = float(rng.uniform(-1.0, 1.0))
    params = PcaParams(beta, h, kernel)
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return box, Periodic(), "periodic", params
    if kind == 1:
        fill, name = 1, "plus"
    elif kind == 2:
        fill, name = -1, "minus"
    else:
        fill, name = None, "random"
    exterior = box.exterior_closure(2 * max(kernel.reach, 1))
    if fill is None:
        spins = {s: int(rng.choice((-1, 1))) for s in exterior}
    else:
        spins = {s: fill for s in exterior}
    return box, Fixed(spins), name, params


def verify_instance(
    box: Box,
    bc: BoundaryCondition,
    bc_name: str,
    params: PcaParams,
    seed: int = 0,
    n_entropy_draws: int = 3,
) -> list[CheckResult]:
    """Run every applicable check on one instance."""
    label = instance_label(box, bc_name, params)
    periodic = isinstance(bc, Periodic)
    ctx = TransitionContext(params, box, bc)
    tm = build_matrix(ctx)
    results: list[CheckResult] = []

    def add(check: str, residual: float, tol: float) -> None:
        results.append(CheckResult(check, label, float(residual), tol))

    add("row_sums", np.abs(tm.matrix.sum(axis=1) - 1.0).max(), 1e-12)

    nu = Distribution(box, weight_table(box, bc, params, "closed_form").probabilities())
    add("stationarity", total_variation(nu.probs @ tm.matrix, nu.probs), 1e-12)
    add("detailed_balance", detailed_balance_residual(tm, nu), 1e-12)

    power = stationary_distribution(tm)
    add("power_iteration", total_variation(power.probs, nu.probs), 1e-10)

    gibbs_probs = weight_table(box, bc, params, "hamiltonian").probabilities()
    product_probs = weight_table(box, bc, params, "product").probabilities()
    add("two_route_gibbs", np.abs(gibbs_probs - product_probs).max(), 1e-12)
    if periodic:
        add("periodic_product_identity", np.abs(nu.probs - gibbs_probs).max(), 1e-12)

    rng = np.random.default_rng(derive_seed(seed, 101))
    worst = 0.0
    for _ in range(n_entropy_draws):
        draw = rng.dirichlet(np.ones(2**box.n_sites))
        lhs, rhs = entropy_production(Distribution(box, draw), tm, nu)
        worst = max(worst, abs(lhs - rhs))
    add("entropy_production", worst, 1e-10)

    back = backward_kernel(tm, nu)
    again = backward_kernel(back, Distribution(box, nu.probs @ tm.matrix))
    add("backward_bayes", np.abs(again.matrix - tm.matrix).max(), 1e-12)

    if (
        params.h == 0.0
        and box.dim == 2
        and isinstance(bc, Fixed)
        and params.kernel[(0, 0)] == 0.0
        and all(o in ((1, 0), (-1, 0), (0, 1), (0, -1)) for o in params.kernel.support)
        and box.n_sites <= 16
    ):
        ising = ising_correspondence_check(box, bc, params)
        add("ising_even_marginal", ising.marginal_deviation, 1e-12)
        add("sublattice_independence", ising.independence_defect, 1e-12)

    if params.h == 0.0:
        for which, name in (((0, 0), "center"), ((0, 1), "axis")):
            if box.dim != 2 or params.kernel[which] == 0.0:
                continue
            try:
                flipped_params, flip = transform_model(params, which)
            except ModelError:
                continue
            try:
                flipped_bc = flip.apply_bc(bc, box, 2 * params.kernel.reach)
            except ModelError:
                continue
            table = weight_table(box, bc, params, "hamiltonian").probabilities()
            table_star = weight_table(
                box, flipped_bc, flipped_params, "hamiltonian"
            ).probabilities()
            perm = flip.index_permutation(box)
            add(f"conjugation_table_{name}", np.abs(table_star[perm] - table).max(), 1e-12)
            if periodic:
                nu_star = weight_table(
                    box, Periodic(), flipped_params, "closed_form"
                ).probabilities()
                add(
                    f"conjugation_stationary_{name}",
                    np.abs(nu_star[perm] - nu.probs).max(),
                    1e-12,
                )
    return results


def builtin_battery(seed: int = 0) -> list[CheckResult]:
    """Deterministic default instance set for the command line verifier."""
    results: list[CheckResult] = []
    fixed_cases = [
        (Box((2, 2)), Periodic(), "periodic", PcaParams(0.8, 0.25, CouplingKernel.range1(0.4, 0.7, -0.3))),
        (Box((2, 2)), Periodic(), "periodic", PcaParams(1.1, 0.0, CouplingKernel.range1(0.5, 0.8, 0.6))),
        (Box((3, 3)), Fixed.uniform(1), "plus", PcaParams(0.7, 0.0, CouplingKernel.range1(0.0, 1.0, 1.0))),
        (Box((3, 3)), Periodic(), "periodic", PcaParams(0.7, 0.0, CouplingKernel.range1(0.0, 1.0, 1.0))),
    ]
    for box, bc, name, params in fixed_cases:
        results.extend(verify_instance(box, bc, name, params, seed=seed))
    for i in range(4):
        box, bc, name, params = random_instance(derive_seed(seed, 7000 + i))
        results.extend(verify_instance(box, bc, name, params, seed=derive_seed(seed, i)))
    return results
