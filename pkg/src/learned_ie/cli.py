"""``learned-dtn`` command line: gen, fit, validate, poles, sweep.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every output except ``run_meta.json`` is a deterministic function of the
configuration and seed; wall-clock data goes to that sidecar (and to the
``time`` column of ``fitreport.csv``).
"""

import argparse
import datetime
import json
import logging
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import learned
from .config import EXPERIMENTS, load_config
from .dtn import generate_samples, read_samples_csv, select_samples, write_samples_csv
from .errors import ConfigError, DomainError, LearnedIEError, SchemaError, UnsupportedOrderError
from .fem import RadialMesh
from .fit import FitResult, successive_learn, weighted_sup_error
from .learned import poles
from .validation import (
    ExactDtn,
    planewave_experiment,
    pointsource_trace_experiment,
    waveguide_experiment,
    write_mode_csv,
    write_report_csv,
)

log = logging.getLogger("learned_dtn")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
SAMPLES_FILE = "samples.csv"
FIT_REPORT = "fitreport.csv"
FIT_HEADER = ["N", "cost", "gradient", "iterations", "time"]
SWEEP_FILE = "sweep.csv"
SWEEP_HEADER = ["N", "cost", "gradient", "iterations", "rel_l2_error", "sup_weighted_dtn_error"]
TRACE_HEADER = ["iter", "cost", "gradient_norm", "damping", "accepted"]
POLES_HEADER = ["j", "pole_re", "pole_im"]
META_FILE = "run_meta.json"
_LEARNED_RE = re.compile(r"learned_N(\d+)\.json$")

_EXPERIMENT_MODEL = {"planewave": "hom", "planewave-jump": "jump", "pointsource": "hom", "waveguide": "guide"}


def learned_path(out, n):
    return Path(out) / f"learned_N{n}.json"


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.17g}"


def _out_dir(args, cfg):
    if args.out:
        out = Path(args.out)
    elif cfg is not None:
        out = Path(cfg.base_dir) / cfg.out
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


class _Meta:
    """Timestamp sidecar; the only non-deterministic artifact."""

    def __init__(self, out, command):
        self.path = Path(out) / META_FILE
        self.data = {}
        if self.path.exists():
            try:
                self.data = json.loads(self.path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                self.data = {}
        self.data.setdefault("wall_times", {})
        self.data["command"] = command
        self.data["started"] = _now()

    def wall_time(self, n):
        return self.data["wall_times"].get(str(n))

    def set_wall_time(self, n, t):
        self.data["wall_times"][str(n)] = t

    def close(self):
        self.data["finished"] = _now()
        self.path.write_text(json.dumps(self.data, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# commands


def cmd_gen(cfg, out):
    model = cfg.build_model()
    samples = generate_samples(model, cfg.l_max, cfg.weight_scheme, cfg.weight_params, geometry=cfg.geometry)
    if cfg.coarse_stride is not None:
        samples = samples.subset(select_samples(samples, cfg.coarse_stride, cfg.refine_quantile))
    path = Path(out) / SAMPLES_FILE
    write_samples_csv(samples, path)
    log.info("wrote %d samples to %s", len(samples), path)
    return samples


def _load_samples(cfg, out):
    path = Path(out) / SAMPLES_FILE
    if not path.exists():
        raise SchemaError(f"samples file {str(path)!r} not found; run 'gen' first")
    try:
        return read_samples_csv(path, model=cfg.model)
    except OSError as exc:
        raise SchemaError(f"cannot read samples {str(path)!r}: {exc.strerror}") from exc


def _resumed(out, cfg, samples):
    """Contiguous ladder prefix already on disk, as FitResults."""
    results = []
    for n in range(cfg.N_min, cfg.N_max + 1):
        path = learned_path(out, n)
        if not path.exists():
            break
        ie = learned.load(path)
        if ie.N != n or ie.structure != cfg.structure:
            break
        res = samples.weights * (samples.values - np.atleast_1d(ie.dtn(samples.lambdas)))
        cost = 0.5 * float(np.sum(np.abs(res) ** 2))
        g = ie.fit.get("gradient_norm")
        results.append(
            FitResult(ie, cost, math.nan if g is None else g, int(ie.fit.get("iterations", 0)), 0.0, res, "resumed")
        )
    return results


def cmd_fit(cfg, out, resume=False, trace=False, meta=None):
    samples = _load_samples(cfg, out)
    fit_cfg = replace(cfg.fit, record_trace=True) if trace else cfg.fit
    done = _resumed(out, cfg, samples) if resume else []
    if done:
        log.info("resuming after N=%d", done[-1].N)
    start_n = cfg.N_min + len(done)
    new = []
    if start_n <= cfg.N_max:
        new = successive_learn(
            samples,
            cfg.N_max,
            fit_cfg,
            structure=cfg.structure,
            N_min=start_n,
            start=done[-1] if done else None,
        )
    for res in new:
        learned.save(res.ie, learned_path(out, res.N))
        if meta is not None:
            meta.set_wall_time(res.N, res.wall_time)
        if trace:
            _write_trace(Path(out) / f"trace_N{res.N}.csv", res.trace)
    results = done + new
    with open(Path(out) / FIT_REPORT, "w", encoding="utf-8") as fh:
        fh.write(",".join(FIT_HEADER) + "\n")
        for res in results:
            t = res.wall_time
            if res.status == "resumed" and meta is not None:
                t = meta.wall_time(res.N)
            fh.write(f"{res.N},{_fmt(res.final_cost)},{_fmt(res.gradient_norm)},{res.iterations},{_fmt(t)}\n")
    return results


def _write_trace(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for it, cost, g, mu, ok in trace:
            fh.write(f"{it},{_fmt(cost)},{_fmt(g)},{_fmt(mu)},{int(ok)}\n")


def _load_ladder(cfg, out):
    ladder = []
    for n in range(cfg.N_min, cfg.N_max + 1):
        path = learned_path(out, n)
        if not path.exists():
            log.warning("skipping N=%d: %s not found", n, path)
            continue
        ladder.append(learned.load(path))
    return ladder


def run_experiment(name, cfg, ladder, samples=None):
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")
    model = cfg.build_model()
    if model.kind != _EXPERIMENT_MODEL[name]:
        raise ConfigError(f"experiment {name!r} needs a {_EXPERIMENT_MODEL[name]!r} model, got {model.kind!r}")
    p = cfg.experiment_params(name)
    scheme = cfg.weight_scheme
    if name in ("planewave", "planewave-jump"):
        mesh = RadialMesh.uniform(float(p["R_scatter"]), model.a, int(p["n_elements"]), int(p["order"]))
        return planewave_experiment(
            model, float(p["R_scatter"]), ladder, mesh=mesh, l_max=p["l_max"], samples=samples, weight_scheme=scheme
        )
    if name == "pointsource":
        return pointsource_trace_experiment(p["source"], model, ladder, l_max=p["l_max"], samples=samples, weight_scheme=scheme)
    length = float(p["length"])
    mesh = RadialMesh.uniform(0.0, length, int(p["n_elements"]), int(p["order"]))
    return waveguide_experiment(model, length, int(p["L"]), ladder, mesh=mesh, samples=samples, weight_scheme=scheme)


def cmd_validate(cfg, out, name=None, exact=False):
    name = name or cfg.experiment.get("name")
    if name is None:
        raise ConfigError(f"no experiment given; valid names: {', '.join(EXPERIMENTS)}")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")
    samples_path = Path(out) / SAMPLES_FILE
    samples = read_samples_csv(samples_path, model=cfg.model) if samples_path.exists() else None
    if exact:
        ladder = [ExactDtn(cfg.build_model())]
        samples = None
    else:
        ladder = _load_ladder(cfg, out)
    report = run_experiment(name, cfg, ladder, samples)
    write_report_csv(report, Path(out) / f"report_{name}.csv")
    for i, n in enumerate(report.N):
        tag = "exact" if n < 0 else f"N{n}"
        write_mode_csv(report, i, Path(out) / f"modes_{name}_{tag}.csv")
    return report


def write_poles_csv(ie, path):
    if ie.structure != "reduced":
        raise ConfigError("poles are only defined for the reduced structure; dense input is unsupported")
    p = poles(ie.reduced_params())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(POLES_HEADER) + "\n")
        for j, z in enumerate(p, start=1):
            fh.write(f"{j},{_fmt(z.real)},{_fmt(z.imag)}\n")
    return p


def cmd_poles(out, inputs):
    if not inputs:
        inputs = sorted(Path(out).glob("learned_N*.json"), key=lambda q: int(_LEARNED_RE.search(q.name).group(1)))
        if not inputs:
            raise ConfigError(f"no learned_N*.json files in {str(out)!r}")
    written = []
    for path in inputs:
        ie = learned.load(path)
        target = Path(out) / f"poles_N{ie.N}.csv"
        write_poles_csv(ie, target)
        written.append(target)
    return written


def cmd_sweep(cfg, out, resume=False, meta=None):
    if not (resume and (Path(out) / SAMPLES_FILE).exists()):
        cmd_gen(cfg, out)
    results = cmd_fit(cfg, out, resume=resume, meta=meta)
    samples = _load_samples(cfg, out)
    name = cfg.experiment.get("name")
    errors = {}
    if name is not None:
        report = cmd_validate(cfg, out, name)
        errors = {int(n): e for n, e in zip(report.N, report.rel_errors)}
    with open(Path(out) / SWEEP_FILE, "w", encoding="utf-8") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for res in results:
            sup = weighted_sup_error(res.ie, samples)
            fh.write(
                f"{res.N},{_fmt(res.final_cost)},{_fmt(res.gradient_norm)},{res.iterations},"
                f"{_fmt(errors.get(res.N, math.nan))},{_fmt(sup)}\n"
            )
    return results


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="learned-dtn", description="Fit and validate learned infinite elements.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: the config's 'out')")
        p.add_argument("--seed", type=int, help="override fit.rng_seed")
        return p

    common(sub.add_parser("gen", help="compute reference dtn samples"))
    p = common(sub.add_parser("fit", help="successive learning up to N_max"))
    p.add_argument("--resume", action="store_true", help="reuse learned_N*.json already in the output directory")
    p.add_argument("--trace", action="store_true", help="write per-iteration LM traces")
    p = common(sub.add_parser("validate", help="run a mode-space experiment on the learned ladder"))
    p.add_argument("--experiment", help=f"one of {', '.join(EXPERIMENTS)}")
    p.add_argument("--exact-dtn", action="store_true", help="inject the reference dtn instead of learned IEs")
    p = common(sub.add_parser("poles", help="export learned poles"), config_required=False)
    p.add_argument("--input", nargs="*", default=[], help="learned JSON files (default: all in the output directory)")
    p = common(sub.add_parser("sweep", help="gen, fit and validate in one run"))
    p.add_argument("--resume", action="store_true", help="reuse existing samples and learned JSONs")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "poles":
            cfg = load_config(args.config) if args.config else None
            cmd_poles(_out_dir(args, cfg), args.input)
            return EXIT_OK
        cfg = _config(args)
        out = _out_dir(args, cfg)
        if args.command == "gen":
            cmd_gen(cfg, out)
        elif args.command == "fit":
            meta = _Meta(out, "fit")
            cmd_fit(cfg, out, resume=args.resume, trace=args.trace, meta=meta)
            meta.close()
        elif args.command == "validate":
            cmd_validate(cfg, out, args.experiment, exact=args.exact_dtn)
        elif args.command == "sweep":
            meta = _Meta(out, "sweep")
            cmd_sweep(cfg, out, resume=args.resume, meta=meta)
            meta.close()
    except (ConfigError, SchemaError, DomainError, UnsupportedOrderError) as exc:
        print(f"learned-dtn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LearnedIEError as exc:
        print(f"learned-dtn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
