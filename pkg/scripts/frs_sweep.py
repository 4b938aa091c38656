"""Sweep integer exponents and compare limit_at_zero with extrapolated densities.

For every (A, B) with n <= nmax and entries <= top that falls in Case1 or
Case2, the density is sampled on q = 10**-3 .. 10**-8 and extrapolated to
q = 0 with Wynn's epsilon algorithm. Writes one CSV row per pair.
"""
import argparse
import csv
import itertools
import sys
import time

import numpy as np

from monopush import monomial_core as mc
from monopush.exponents import ExponentData
from monopush.oracle import wynn_epsilon


def sweep(nmax, top):
    qs = 10.0 ** -np.linspace(3, 8, 9)
    for n in range(1, nmax + 1):
        for A in itertools.product(range(top + 1), repeat=n):
            if not any(A):
                continue
            for B in itertools.product(range(top + 1), repeat=n):
                e = ExponentData(A, B)
                case, axis = mc.frs_case(e)
                if case is mc.FRSCase.OUTSIDE:
                    continue
                lim = mc.limit_at_zero(e).value
                rho = mc.density_unit_cube(e, qs)
                est = wynn_epsilon(rho)
                scale = abs(lim) if lim != 0 else float(np.max(np.abs(rho)))
                yield {
                    "A": " ".join(map(str, A)),
                    "B": " ".join(map(str, B)),
                    "case": case.value,
                    "parity": mc.parity_of(A).value,
                    "axis": "" if axis is None else axis,
                    "limit": repr(lim),
                    "extrapolated": repr(est),
                    "rel_err": repr(abs(est - lim) / scale),
                }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nmax", type=int, default=4)
    p.add_argument("--top", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    args = p.parse_args(argv)

    t0 = time.perf_counter()
    rows = list(sweep(args.nmax, args.top))
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    if fh is not sys.stdout:
        fh.close()

    worst = max(float(r["rel_err"]) for r in rows)
    bad = sum(float(r["rel_err"]) > args.tol for r in rows)
    print(f"{len(rows)} pairs, worst rel err {worst:.2e}, {bad} above {args.tol:g}, "
          f"{time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
