"""Learned infinite elements: fitting rational dtn approximations mode by mode."""

from .dtn import (
    DtnSamples,
    HomogeneousDisk,
    JumpDisk,
    Stratified,
    Waveguide,
    dtn_guide,
    dtn_hom,
    dtn_jump,
    dtn_ode,
    generate_samples,
    make_weights,
)
from .fit import FitConfig, FitResult, fit_dense, fit_reduced, lm_minimize, misfit, successive_learn
from .learned import LearnedIE, ReducedParams, eval_dtn_reduced, poles

__version__ = "0.1.0"

__all__ = [
    "DtnSamples",
    "FitConfig",
    "FitResult",
    "HomogeneousDisk",
    "JumpDisk",
    "LearnedIE",
    "ReducedParams",
    "Stratified",
    "Waveguide",
    "dtn_guide",
    "dtn_hom",
    "dtn_jump",
    "dtn_ode",
    "eval_dtn_reduced",
    "fit_dense",
    "fit_reduced",
    "generate_samples",
    "lm_minimize",
    "make_weights",
    "misfit",
    "poles",
    "successive_learn",
]
