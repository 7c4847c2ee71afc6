"""Fit the homogeneous disk with dense and reduced matrices and compare the learned dtn."""

from pathlib import Path

from _common import parser, write_rows

from learned_ie.experiments import dense_vs_reduced


def main():
    args = parser(__doc__, "results/dense_vs_reduced").parse_args()
    mismatch, red, den = dense_vs_reduced((0, 2, 4))
    rows = []
    for N in mismatch:
        rows.append((N, red[N].final_cost, den[N].final_cost, mismatch[N]))
        print(f"N={N}: reduced cost {red[N].final_cost:.3e}, dense cost {den[N].final_cost:.3e}, max mismatch {rows[-1][3]:.2e}")
    write_rows(Path(args.out) / "dense_vs_reduced.csv", ["N", "cost_reduced", "cost_dense", "max_rel_mismatch"], rows)


if __name__ == "__main__":
    main()
