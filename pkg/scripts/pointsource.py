"""Point source inside the disk: relative trace error of the Neumann-to-Dirichlet solve per N."""

from pathlib import Path

from _common import parser, write_rows

from learned_ie.experiments import pointsource_ladder


def main():
    p = parser(__doc__, "results/pointsource")
    p.add_argument("--source", type=float, nargs=2, default=[0.5, 0.0])
    p.add_argument("--N-max", type=int, default=10)
    args = p.parse_args()
    rep = pointsource_ladder(tuple(args.source), N_max=args.N_max)
    rows = [(int(n), float(e), float(s)) for n, e, s in zip(rep.N, rep.rel_errors, rep.sup_errors)]
    for n, e, _ in rows:
        print(f"N={n}: relative trace error {e:.3e}")
    write_rows(Path(args.out) / "pointsource.csv", ["N", "rel_l2_error", "sup_weighted_dtn_error"], rows)


if __name__ == "__main__":
    main()
