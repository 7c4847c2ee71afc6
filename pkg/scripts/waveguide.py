"""Waveguide of width pi: error per N and the evanescent share of it, for one weight scheme."""

import math
from pathlib import Path

import numpy as np
from _common import parser, write_rows

from learned_ie.experiments import waveguide_ladder
from learned_ie.fem import RadialMesh


def main():
    p = parser(__doc__, "results/waveguide")
    p.add_argument("--scheme", default="uniform", choices=["uniform", "waveguide"])
    p.add_argument("--N", type=int, nargs="+", default=[2, 5, 10, 20])
    args = p.parse_args()
    mesh = RadialMesh.uniform(0.0, 2.0 * math.pi, 128, 8)
    report, _, _ = waveguide_ladder(tuple(args.N), scheme=args.scheme, mesh=mesh)
    ev = report.ells >= 17
    rows = []
    for i, n in enumerate(report.N):
        share = float(np.sum(report.mode_errors[i, ev] ** 2) / np.sum(report.mode_errors[i] ** 2))
        rows.append((int(n), float(report.rel_errors[i]), float(report.sup_errors[i]), share))
        print(f"N={n}: error {rows[-1][1]:.3e}, evanescent share {share:.2e}")
    header = ["N", "rel_l2_error", "sup_weighted_dtn_error", "evanescent_share"]
    write_rows(Path(args.out) / f"waveguide_{args.scheme}.csv", header, rows)


if __name__ == "__main__":
    main()
