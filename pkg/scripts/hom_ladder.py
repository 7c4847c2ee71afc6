"""Successive learning on the homogeneous disk: cost and weighted sup error per N."""

from pathlib import Path

from _common import parser, write_rows

from learned_ie.experiments import hom_ladder


def main():
    p = parser(__doc__, "results/hom_ladder")
    p.add_argument("--N-max", type=int, default=6)
    args = p.parse_args()
    costs, sup, results = hom_ladder(args.N_max)
    rows = [(r.N, c, s, r.iterations) for r, c, s in zip(results, costs, sup)]
    for row in rows:
        print("N={} cost={:.3e} sup={:.3e} iterations={}".format(*row))
    write_rows(Path(args.out) / "hom_ladder.csv", ["N", "cost", "sup_weighted_dtn_error", "iterations"], rows)


if __name__ == "__main__":
    main()
