"""Command line interface.

Subcommands cover the standard workflows: exact verification batteries,
the contour bound, trajectory simulation, phase scans, the alternation
experiment, monotone coupling, and contour analysis of a snapshot.

Every output is CSV preceded by ``# key=value`` provenance comments
holding the fully resolved model and the seed, so a run is repeatable
from its own output.  Exit status: 0 on success, 1 when a verification
or diagnostic check fails, 2 on usage or model errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from .contours import (
    beta_threshold,
    contour_classes,
    contour_weight,
    marked_segments,
    minimal_contour_around,
    peierls_bound,
    split_into_peierls,
)
from .dynamics import TransitionContext
from .lattice import Fixed, ModelError, Periodic, SpinConfig
from .modelfile import ModelSpec, load_model, model_from_overrides
from .montecarlo import (
    kernel_label,
    nonstationarity_run,
    parse_snapshot,
    phase_scan,
    run_chain,
    run_coupled,
    snapshot_text,
)
from .verify import DEFAULT_SITE_CEILING, builtin_battery, verify_instance

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _emit(out_path: str, provenance, columns, rows) -> None:
    """CSV with deterministic '# key=value' provenance comment lines."""
    fh = sys.stdout if out_path in (None, "-") else open(out_path, "w", newline="")
    try:
        for key, value in provenance:
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _load_spec(args) -> ModelSpec:
    overrides = args.set or []
    if args.model:
        return load_model(args.model, overrides)
    if overrides:
        return model_from_overrides(overrides)
    raise ModelError("no model given: pass --model FILE or --set key=value")


def _provenance(args, spec: ModelSpec | None, extra=()) -> list[tuple[str, str]]:
    pairs = [("command", args.command), ("version", __version__)]
    if spec is not None:
        pairs.extend(spec.resolved)
    pairs.append(("seed", str(args.seed)))
    pairs.extend(extra)
    return pairs


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="model file (key = value lines)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override or supply a model entry (repeatable)",
    )
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    parser.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    parser.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("PCALAB_WORKERS", "1")),
        help="parallel workers where applicable (default $PCALAB_WORKERS or 1)",
    )


def _cmd_exact_verify(args) -> int:
    spec = None
    if args.model or args.set:
        spec = _load_spec(args).require("box", "params", "bc")
        n = spec.box.n_sites
        if n > args.max_sites:
            raise ModelError(
                f"exact ceiling: {n} sites exceeds the limit of {args.max_sites}"
            )
        results = verify_instance(
            spec.box, spec.bc, spec.bc_name, spec.params, seed=args.seed
        )
    else:
        results = builtin_battery(args.seed)
    if args.check:
        results = [r for r in results if r.check == args.check]
        if not results:
            raise ModelError(f"no check named {args.check!r} applies here")
    rows = [
        (r.check, r.instance, repr(r.residual), repr(r.tolerance),
         "pass" if r.passed else "FAIL")
        for r in results
    ]
    _emit(args.out, _provenance(args, spec), ("check", "instance", "residual", "tolerance", "status"), rows)
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.check} on {r.instance}: {r.residual:.3e}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_peierls_bound(args) -> int:
    spec = _load_spec(args).require("params")
    params = spec.params
    bound = peierls_bound(params.beta, params.kernel)
    rows = [
        ("a", f"{bound.a:.12g}"),
        ("b", f"{bound.b:.12g}"),
        ("ratio", f"{bound.ratio:.12g}"),
        ("contractive", str(bound.contractive).lower()),
        ("bound", f"{bound.value:.12g}" if bound.contractive else "divergent"),
    ]
    if bound.a < bound.b:
        rows.append(("beta_threshold", f"{beta_threshold(params.kernel, args.target):.12g}"))
    else:
        rows.append(("beta_threshold", "none"))
    _emit(args.out, _provenance(args, spec, [("target", repr(args.target))]),
          ("quantity", "value"), rows)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = _load_spec(args).require("box", "params", "bc")
    ctx = TransitionContext(spec.params, spec.box, spec.bc)
    start = SpinConfig.constant(spec.box, -1 if args.start == "minus" else 1)
    run = run_chain(ctx, start, args.steps, args.seed, burnin=args.burnin,
                    record_energy=args.energy)
    columns = ["step", "magnetization"] + (["energy"] if args.energy else [])
    rows = []
    for t in range(args.steps):
        row = [args.burnin + t + 1, repr(float(run.magnetizations[t]))]
        if args.energy:
            row.append(repr(float(run.energies[t])))
        rows.append(row)
    extra = [("steps", str(args.steps)), ("burnin", str(args.burnin)),
             ("start", args.start)]
    _emit(args.out, _provenance(args, spec, extra), columns, rows)
    if args.snapshot:
        with open(args.snapshot, "w") as fh:
            fh.write(snapshot_text(run.final) + "\n")
    return EXIT_OK


def _cmd_phase_scan(args) -> int:
    spec = _load_spec(args).require("box", "params")
    betas = [float(b) for b in args.betas.split(",")]
    records = phase_scan(
        betas,
        spec.params.kernel,
        spec.box,
        steps=args.steps,
        burnin=args.burnin,
        seed=args.seed,
        h=spec.params.h,
        workers=max(1, args.workers),
    )
    extra = [("betas", args.betas), ("steps", str(args.steps)),
             ("burnin", str(args.burnin)), ("workers", str(args.workers))]
    rows = [r.csv_row() for r in records]
    from .montecarlo import ExperimentRecord

    _emit(args.out, _provenance(args, spec, extra), ExperimentRecord.CSV_COLUMNS, rows)
    return EXIT_OK


def _cmd_nonstat(args) -> int:
    spec = _load_spec(args).require("box", "params")
    result = nonstationarity_run(
        spec.params.kernel, spec.params.beta, spec.box, args.steps, args.seed
    )
    extra = [
        ("steps", str(args.steps)),
        ("first_step", repr(result.first_step)),
        ("alternating", str(result.alternating).lower()),
        ("min_abs", repr(result.min_abs)),
        ("checked_steps", str(result.checked_steps)),
    ]
    rows = [
        (t, repr(float(m))) for t, m in enumerate(result.magnetizations)
    ]
    _emit(args.out, _provenance(args, spec, extra), ("step", "magnetization"), rows)
    if not result.alternating:
        print("FAIL: magnetization does not alternate in sign", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_couple(args) -> int:
    spec = _load_spec(args).require("box", "params", "bc")
    ctx = TransitionContext(spec.params, spec.box, spec.bc)
    low = SpinConfig.constant(spec.box, -1)
    high = SpinConfig.constant(spec.box, 1)
    run = run_coupled(ctx, low, high, args.steps, args.seed)
    rows = [
        (t + 1, repr(float(a)), repr(float(b)), int(o))
        for t, (a, b, o) in enumerate(
            zip(run.low_magnetizations, run.high_magnetizations, run.ordered)
        )
    ]
    extra = [("steps", str(args.steps)),
             ("all_ordered", str(run.all_ordered).lower())]
    _emit(args.out, _provenance(args, spec, extra),
          ("step", "m_low", "m_high", "ordered"), rows)
    if not run.all_ordered:
        print("FAIL: pointwise order violated under the shared-noise coupling",
              file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_contour_analyze(args) -> int:
    spec = _load_spec(args).require("params")
    try:
        with open(args.grid) as fh:
            config = parse_snapshot(fh.read())
    except OSError as exc:
        raise ModelError(f"cannot read grid file {args.grid}: {exc}") from exc
    segments = marked_segments(config)
    curves = split_into_peierls(segments)
    classes = contour_classes(curves)
    rows = []
    for class_id, cl in enumerate(classes):
        weight = 1.0
        for member in cl.members:
            weight *= contour_weight(member, config, spec.params)
        rows.append(
            (
                class_id,
                cl.total_length,
                len(cl.boundary_plus),
                len(cl.boundary_minus),
                f"{weight:.12g}",
            )
        )
    extra = [("grid", args.grid), ("segments", str(len(segments))),
             ("curves", str(len(curves)))]
    if args.around:
        site = tuple(int(c) for c in args.around.split(","))
        curve, cl = minimal_contour_around(site, classes)
        extra.append(("around_site", args.around))
        extra.append(("around_length", str(curve.length)))
        extra.append(("around_class_size", str(len(cl.members))))
    _emit(args.out, _provenance(args, spec, extra),
          ("class_id", "length", "boundary_plus", "boundary_minus", "weight_F"), rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcalab",
        description="Synchronous spin-flip automata: exact checks and experiments.",
    )
    parser.add_argument("--version", action="version", version=f"pcalab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact-verify", help="run exact consistency checks")
    _add_common(p)
    p.add_argument("--check", help="run only the named check family")
    p.add_argument(
        "--max-sites", type=int, default=DEFAULT_SITE_CEILING,
        help=f"refuse exact enumeration beyond this many sites (default {DEFAULT_SITE_CEILING})",
    )
    p.set_defaults(func=_cmd_exact_verify)

    p = sub.add_parser("peierls-bound", help="contour constants, bound and threshold")
    _add_common(p)
    p.add_argument("--target", type=float, default=0.5,
                   help="threshold target for the bound (default 0.5)")
    p.set_defaults(func=_cmd_peierls_bound)

    p = sub.add_parser("simulate", help="sample one trajectory")
    _add_common(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--burnin", type=int, default=0)
    p.add_argument("--start", choices=("plus", "minus"), default="plus")
    p.add_argument("--energy", action="store_true", help="also record energy")
    p.add_argument("--snapshot", help="write the final configuration grid here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("phase-scan", help="magnetization under +1/-1 boundaries")
    _add_common(p)
    p.add_argument("--betas", required=True, help="comma separated inverse temperatures")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--burnin", type=int, default=1000)
    p.set_defaults(func=_cmd_phase_scan)

    p = sub.add_parser("nonstat", help="alternation experiment for negative couplings")
    _add_common(p)
    p.add_argument("--steps", type=int, default=200)
    p.set_defaults(func=_cmd_nonstat)

    p = sub.add_parser("couple", help="shared-noise coupling of extreme starts")
    _add_common(p)
    p.add_argument("--steps", type=int, default=1000)
    p.set_defaults(func=_cmd_couple)

    p = sub.add_parser("contour-analyze", help="contour census of a +- grid")
    _add_common(p)
    p.add_argument("--grid", required=True, help="text grid of +/- spins")
    p.add_argument("--around", metavar="X,Y",
                   help="also report the minimal curve around this site")
    p.set_defaults(func=_cmd_contour_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryError:
        # a raised --max-sites can ask for a transition matrix the host
        # cannot hold; refuse cleanly instead of leaking a traceback
        print("error: model too large for exact enumeration on this host",
              file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
