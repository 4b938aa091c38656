"""Box approximation of a tent weight, pushed forward under x1*x2.

f(x) = (1-|x1|)+ (1-|x2|)+ on [-1,1]^2 with B = (0, 1). For each level k
the cell-centre approximation is assembled into exact bin averages and
compared with a Monte Carlo estimate of the f-weighted pushforward.
"""
import argparse
import itertools
import sys

import numpy as np

from monopush import oracle
from monopush.box_calculus import AtomSet, Box, BoxAtom, approximate_by_boxes, assemble_bin_average
from monopush.exponents import ExponentData


def tent(x):
    return max(0.0, 1 - abs(x[0])) * max(0.0, 1 - abs(x[1]))


def tent_rows(X):
    return np.clip(1 - np.abs(X[:, 0]), 0, None) * np.clip(1 - np.abs(X[:, 1]), 0, None)


def oscillation(k, sub=9):
    """Largest |f(x) - f(centre)| over the level-k cells, on a sub-grid with corners."""
    width = 2.0 / (2 * k + 1)
    offs = np.linspace(-width / 2, width / 2, sub)
    worst = 0.0
    for r in itertools.product(range(2 * k + 1), repeat=2):
        c = [-1 + width * (ri + 0.5) for ri in r]
        fc = tent(c)
        for dx, dy in itertools.product(offs, offs):
            worst = max(worst, abs(tent((c[0] + dx, c[1] + dy)) - fc))
    return worst


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--levels", type=int, nargs="+", default=[4, 8, 16])
    p.add_argument("--samples", type=int, default=20_000_000)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--seed", type=int, default=808)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    e = ExponentData((1, 1), (0, 1))
    base = AtomSet((BoxAtom(1.0, Box(((-1.0, 1.0), (-1.0, 1.0))), e),))
    est = oracle.mc_histogram(base, args.samples, seed=args.seed, bins=args.bins,
                              q_range=(-1.0, 1.0), weight=tent_rows, workers=args.workers)
    ones = assemble_bin_average(base, est.bin_edges).values
    print("k,omega,sup_deviation,max_bound_ratio")
    ok = True
    last = np.inf
    for k in args.levels:
        prof = assemble_bin_average(approximate_by_boxes(tent, k, e), est.bin_edges).values
        dev = np.abs(prof - est.bin_density)
        omega = float(oscillation(k))
        ratio = float(np.max(dev / (omega * ones + 5 * est.bin_stderr)))
        ok &= ratio <= 1 and dev.max() < last
        last = dev.max()
        print(f"{k},{omega!r},{float(dev.max())!r},{ratio!r}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
