"""Magnetization vs inverse temperature under opposite boundary fields.

Writes one CSV row per (beta, boundary) pair.  The low temperature side
of the output shows the two branches splitting apart; the high
temperature side collapses onto zero.

    python3 scripts/phase_diagram.py --side 32 --out phase.csv
"""

import argparse
import sys

from pcalab.lattice import Box, CouplingKernel
from pcalab.montecarlo import ExperimentRecord, phase_scan


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--side", type=int, default=32)
    parser.add_argument("--betas", default="0.2,0.3,0.4,0.5,0.6,0.8,1.0,1.2")
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--burnin", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--out", default="-")
    args = parser.parse_args()

    kernel = CouplingKernel.range1(0.0, 1.0, 1.0)
    records = phase_scan(
        [float(b) for b in args.betas.split(",")],
        kernel,
        Box((args.side, args.side)),
        steps=args.steps,
        burnin=args.burnin,
        seed=args.seed,
        workers=args.workers,
    )
    fh = sys.stdout if args.out == "-" else open(args.out, "w")
    try:
        fh.write(",".join(ExperimentRecord.CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(str(v) for v in rec.csv_row()) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
