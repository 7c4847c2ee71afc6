"""JSON run configuration with full defaulting.

Schema (every key optional unless noted)::

    {
      "model": {"kind": "hom" | "jump" | "guide" | "stratified", ...},   # required
      "l_max": 40,
      "geometry": null,                        # circle / sphere / strip; inferred
      "weights": {"scheme": "uniform", "params": {}},
      "sampling": {"coarse_stride": null, "refine_quantile": null},
      "fit": {... FitConfig fields ...},
      "structure": "reduced",
      "N_min": 0, "N_max": 6,
      "experiment": {"name": null, ...experiment parameters...},
      "out": "out"
    }

Model descriptors: ``hom`` needs ``a, k``; ``jump`` needs ``a, R_jump,
k_inner, k_outer``; ``guide`` needs ``k``; ``stratified`` needs either
``builtin`` (``annulus`` with ``k``, ``a``, ``R_outer``; ``well`` with the
keyword arguments of :func:`~learned_ie.dtn.potential_well`) or ``profile``
(a CSV path) with ``omega``, ``gamma``, ``a``, ``R_outer``.
"""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dtn import (
    WEIGHT_SCHEMES,
    HomogeneousDisk,
    JumpDisk,
    Waveguide,
    homogeneous_annulus,
    load_profile_csv,
    potential_well,
    stratified_from_profile,
)
from .errors import ConfigError, LearnedIEError
from .fit import FitConfig

EXPERIMENTS = ("planewave", "planewave-jump", "pointsource", "waveguide")

EXPERIMENT_DEFAULTS = {
    "planewave": {"R_scatter": 0.5, "n_elements": 16, "order": 6, "l_max": None},
    "planewave-jump": {"R_scatter": 0.5, "n_elements": 16, "order": 6, "l_max": None},
    "pointsource": {"source": [0.5, 0.0], "l_max": None},
    "waveguide": {"length": 2.0 * math.pi, "L": 33, "n_elements": 64, "order": 6},
}

_TOP_KEYS = {"model", "l_max", "geometry", "weights", "sampling", "fit", "structure", "N_min", "N_max", "experiment", "out"}


@dataclass(frozen=True)
class RunConfig:
    model: dict
    l_max: int = 40
    geometry: str = None
    weight_scheme: str = "uniform"
    weight_params: dict = field(default_factory=dict)
    coarse_stride: int = None
    refine_quantile: float = None
    fit: FitConfig = field(default_factory=FitConfig)
    structure: str = "reduced"
    N_min: int = 0
    N_max: int = 6
    experiment: dict = field(default_factory=dict)
    out: str = "out"
    base_dir: str = "."

    def __post_init__(self):
        if self.l_max < 0:
            raise ConfigError("l_max must be >= 0")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ConfigError(f"unknown weight scheme {self.weight_scheme!r}; expected one of {WEIGHT_SCHEMES}")
        if self.structure not in ("reduced", "dense"):
            raise ConfigError("structure must be 'reduced' or 'dense'")
        if not 0 <= self.N_min <= self.N_max:
            raise ConfigError("need 0 <= N_min <= N_max")
        if (self.coarse_stride is None) != (self.refine_quantile is None):
            raise ConfigError("sampling needs both coarse_stride and refine_quantile, or neither")
        name = self.experiment.get("name")
        if name is not None and name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")

    def build_model(self):
        """Exterior model object for the descriptor; config errors raise :class:`ConfigError`."""
        return build_model(self.model, self.base_dir)

    def experiment_params(self, name):
        params = dict(EXPERIMENT_DEFAULTS[name])
        params.update({k: v for k, v in self.experiment.items() if k != "name"})
        return params

    def with_seed(self, seed):
        return replace(self, fit=replace(self.fit, rng_seed=int(seed)))

    def to_dict(self):
        return {
            "model": self.model,
            "l_max": self.l_max,
            "geometry": self.geometry,
            "weights": {"scheme": self.weight_scheme, "params": self.weight_params},
            "sampling": {"coarse_stride": self.coarse_stride, "refine_quantile": self.refine_quantile},
            "fit": self.fit.to_dict(),
            "structure": self.structure,
            "N_min": self.N_min,
            "N_max": self.N_max,
            "experiment": self.experiment,
            "out": self.out,
        }


def _require(d, keys, kind):
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigError(f"model kind {kind!r} is missing {', '.join(missing)}")


def build_model(desc, base_dir="."):
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError("model must be an object with a 'kind' field")
    kind = desc["kind"]
    try:
        if kind == "hom":
            _require(desc, ("a", "k"), kind)
            return HomogeneousDisk(float(desc["a"]), float(desc["k"]))
        if kind == "jump":
            _require(desc, ("a", "R_jump", "k_inner", "k_outer"), kind)
            return JumpDisk(float(desc["a"]), float(desc["R_jump"]), float(desc["k_inner"]), float(desc["k_outer"]))
        if kind == "guide":
            _require(desc, ("k",), kind)
            return Waveguide(float(desc["k"]))
        if kind == "stratified":
            return _build_stratified(desc, base_dir)
    except LearnedIEError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model descriptor: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}; expected hom, jump, guide or stratified")


def _build_stratified(desc, base_dir):
    if "profile" in desc:
        _require(desc, ("omega", "a", "R_outer"), "stratified")
        path = Path(desc["profile"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"profile file {str(path)!r} does not exist")
        profile = load_profile_csv(path)
        sigma = complex(float(desc["omega"]), float(desc.get("gamma", 0.0)))
        return stratified_from_profile(
            profile,
            sigma,
            float(desc["a"]),
            float(desc["R_outer"]),
            dimension=int(desc.get("dimension", 3)),
            outer_bc=desc.get("outer_bc", "neumann"),
            path=str(path),
        )
    builtin = desc.get("builtin")
    if builtin == "annulus":
        _require(desc, ("k", "a", "R_outer"), "stratified")
        return homogeneous_annulus(
            float(desc["k"]), float(desc["a"]), float(desc["R_outer"]), desc.get("outer_bc", "neumann")
        )
    if builtin == "well":
        keys = ("omega", "gamma", "c_well", "c_barrier", "r_barrier", "a", "R_outer")
        return potential_well(**{k: float(desc[k]) for k in keys if k in desc})
    raise ConfigError("stratified model needs a 'profile' path or a 'builtin' of 'annulus' or 'well'")


def config_from_dict(d, base_dir="."):
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    if "model" not in d:
        raise ConfigError("configuration needs a 'model' descriptor")
    weights = d.get("weights", {}) or {}
    sampling = d.get("sampling", {}) or {}
    fit_raw = dict(d.get("fit", {}) or {})
    if "pole_guesses" in fit_raw and fit_raw["pole_guesses"] is not None:
        fit_raw["pole_guesses"] = [complex(*p) if isinstance(p, list) else complex(p) for p in fit_raw["pole_guesses"]]
    bad = set(fit_raw) - set(FitConfig.__dataclass_fields__)
    if bad:
        raise ConfigError(f"unknown fit keys: {', '.join(sorted(bad))}")
    try:
        fit = FitConfig(**fit_raw)
        cfg = RunConfig(
            model=dict(d["model"]),
            l_max=int(d.get("l_max", 40)),
            geometry=d.get("geometry"),
            weight_scheme=weights.get("scheme", "uniform"),
            weight_params=dict(weights.get("params", {}) or {}),
            coarse_stride=sampling.get("coarse_stride"),
            refine_quantile=sampling.get("refine_quantile"),
            fit=fit,
            structure=d.get("structure", "reduced"),
            N_min=int(d.get("N_min", 0)),
            N_max=int(d.get("N_max", 6)),
            experiment=dict(d.get("experiment", {}) or {}),
            out=str(d.get("out", "out")),
            base_dir=str(base_dir),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)
