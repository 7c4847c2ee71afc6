"""Plane-wave scattering from a disk: relative interior error per N for several seeds."""

from pathlib import Path

import numpy as np
from _common import parser, write_rows

from learned_ie.experiments import planewave_ladder


def main():
    p = parser(__doc__, "results/planewave")
    p.add_argument("--N-max", type=int, default=6)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = p.parse_args()
    reports = planewave_ladder(N_max=args.N_max, seeds=args.seeds)
    rows = []
    for seed, rep in zip(args.seeds, reports):
        rows += [(seed, int(n), float(e), float(s)) for n, e, s in zip(rep.N, rep.rel_errors, rep.sup_errors)]
    best = np.min([rep.rel_errors for rep in reports], axis=0)
    for n, e in zip(reports[0].N, best):
        print(f"N={n}: best relative error {e:.3e}")
    write_rows(Path(args.out) / "planewave.csv", ["seed", "N", "rel_l2_error", "sup_weighted_dtn_error"], rows)


if __name__ == "__main__":
    main()
