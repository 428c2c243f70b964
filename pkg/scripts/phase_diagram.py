"""Obstacle-dominance phase diagrams for n holes of radius 1 and 6 in a square of side 100.

    python scripts/phase_diagram.py --outdir results/

Produces phase_r1.csv and phase_r6.csv (columns n,rho,ratio,pfc,below_threshold)
and prints where the ratio first exceeds one along each rho column.
"""
import argparse
import os
import sys

import numpy as np

from softgeo.cli import PHASE_COLUMNS, atomic_write, rows_csv, phase_rows

L, BETA = 100.0, 1.0
N_MAX = {1.0: 600, 6.0: 60}  # 60 holes of radius 6 already cover 68% of the square


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default=".")
    ap.add_argument("--rho-max", type=float, default=10.0)
    args = ap.parse_args(argv)
    os.makedirs(args.outdir, exist_ok=True)
    rhos = np.arange(0.25, args.rho_max + 1e-9, 0.25).tolist()
    for r, n_max in N_MAX.items():
        ns = list(range(0, n_max + 1))
        rows = phase_rows(L, r, BETA, ns, rhos)
        path = os.path.join(args.outdir, f"phase_r{r:g}.csv")
        atomic_write(path, rows_csv(PHASE_COLUMNS, rows))
        first = {}
        for n, rho, ratio, _, _ in rows:
            if ratio > 1:
                first[rho] = min(n, first.get(rho, n))
        summary = ", ".join(f"rho={k:g}: n={first[k]}" for k in sorted(first)[::4])
        print(f"r={r:g}: wrote {path}; first n with ratio > 1 -> {summary or 'none'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
