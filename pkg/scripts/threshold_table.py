"""Contractivity thresholds for a few self-coupling strengths.

For each kernel the table lists the mixed and uniform field constants,
and the inverse temperature beyond which the contour sum certifies a
boundary-dominated minus probability below one half.  Without a
self-coupling term the two constants tie and no threshold exists.

    python3 scripts/threshold_table.py
"""

import sys

from pcalab.contours import beta_threshold, peierls_bound, peierls_constants
from pcalab.lattice import CouplingKernel, ModelError
from pcalab.montecarlo import kernel_label


def main() -> int:
    print(f"{'kernel':<28} {'a':>5} {'b':>5} {'beta*':>12} {'bound(beta*)':>14}")
    for k0 in (0.0, 0.25, 0.5, 1.0, 2.0):
        kernel = CouplingKernel.range1(k0, 1.0, 1.0)
        a, b = peierls_constants(kernel)
        try:
            star = beta_threshold(kernel)
            value = peierls_bound(star + 1e-6, kernel).value
            print(f"{kernel_label(kernel):<28} {a:>5.2f} {b:>5.2f} {star:>12.6f} {value:>14.6g}")
        except ModelError:
            print(f"{kernel_label(kernel):<28} {a:>5.2f} {b:>5.2f} {'none':>12} {'divergent':>14}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
