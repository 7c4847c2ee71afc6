"""Two-layer exterior: learned poles at N=6 next to the ladder costs."""

from pathlib import Path

from _common import parser, write_rows

from learned_ie.experiments import jump_fit


def main():
    p = parser(__doc__, "results/jump")
    p.add_argument("--N", type=int, default=6)
    args = p.parse_args()
    ladder, learned_poles, _ = jump_fit(args.N)
    write_rows(Path(args.out) / "jump_ladder.csv", ["N", "cost"], [(r.N, r.final_cost) for r in ladder])
    rows = [(j, float(z.real), float(z.imag)) for j, z in enumerate(learned_poles, start=1)]
    for j, re, im in rows:
        print(f"pole {j}: {re:.5f} {im:+.5f}i")
    write_rows(Path(args.out) / "jump_poles.csv", ["j", "pole_re", "pole_im"], rows)


if __name__ == "__main__":
    main()
