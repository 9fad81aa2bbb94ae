"""trimreg: sparse linear regression that is simultaneously robust to
mean-shift outliers (excluded by trimming) and variance-inflation outliers
(down-weighted by estimated per-unit weights).

The main entry points are the ``fit_*`` pipelines and the ``trimreg`` command
line tool. Set ``TRIMREG_BACKEND=numpy`` to disable the compiled kernels.
"""

__version__ = "0.1.0"

from .backends import BACKEND
from .exceptions import (
    ConvergenceError,
    DegenerateLeverageError,
    ParameterError,
    RankDeficiencyError,
    TrimregError,
)
from .model import (
    ADAPTIVE_L1,
    L1,
    SCAD,
    Dataset,
    FitResult,
    OutlierSets,
    PenaltySpec,
    ProxyMatrices,
)
from .penalty import penalty_value, scad_derivative, scad_value, soft_threshold
from .pipeline import (
    default_lambda_grid,
    fit_heur,
    fit_lasso,
    fit_opt,
    fit_scad2s,
    fit_scadopt,
    fit_scadws,
    fit_sparselts,
    tune_lambda_step1,
)
from .simulate import Scenario, generate, run_scenario
from .step1 import Step1Config, solve_step1
from .step2 import build_augmented_design, solve_step2
from .step3 import estimate_single_weight, plugin_weight, refit_with_weights, restricted_loglik
from .tuning import bicr, consistency_factor, grid_search

__all__ = [
    "ADAPTIVE_L1",
    "BACKEND",
    "ConvergenceError",
    "Dataset",
    "DegenerateLeverageError",
    "FitResult",
    "L1",
    "OutlierSets",
    "ParameterError",
    "PenaltySpec",
    "ProxyMatrices",
    "RankDeficiencyError",
    "SCAD",
    "Scenario",
    "Step1Config",
    "TrimregError",
    "bicr",
    "build_augmented_design",
    "consistency_factor",
    "default_lambda_grid",
    "estimate_single_weight",
    "fit_heur",
    "fit_lasso",
    "fit_opt",
    "fit_scad2s",
    "fit_scadopt",
    "fit_scadws",
    "fit_sparselts",
    "generate",
    "grid_search",
    "penalty_value",
    "plugin_weight",
    "refit_with_weights",
    "restricted_loglik",
    "run_scenario",
    "scad_derivative",
    "scad_value",
    "soft_threshold",
    "solve_step1",
    "solve_step2",
    "tune_lambda_step1",
]
