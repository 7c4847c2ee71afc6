"""Stratified exterior with a trapping well: reference dtn, resonance spikes and ladder errors."""

from pathlib import Path

from _common import parser, write_rows

from learned_ie.experiments import spike_indices, well_ladder


def main():
    p = parser(__doc__, "results/well")
    p.add_argument("--N-max", type=int, default=5)
    args = p.parse_args()
    samples, ladder, sup = well_ladder(args.N_max)
    spikes = set(int(samples.ells[i]) for i in spike_indices(samples.values))
    print(f"resonance spikes at ell = {sorted(spikes)}")
    rows = [(int(l), float(lam), float(v.real), float(v.imag), int(int(l) in spikes))
            for l, lam, v in zip(samples.ells, samples.lambdas, samples.values)]
    write_rows(Path(args.out) / "well_dtn.csv", ["ell", "lambda", "dtn_re", "dtn_im", "spike"], rows)
    write_rows(Path(args.out) / "well_ladder.csv", ["N", "cost", "sup_weighted_dtn_error"],
               [(r.N, r.final_cost, s) for r, s in zip(ladder, sup)])


if __name__ == "__main__":
    main()
