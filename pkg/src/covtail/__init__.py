"""covtail: lower-tail bounds for empirical covariance, OLS and restricted eigenvalues, with Monte Carlo verifiers."""

from covtail.lowertail import (
    LowerTailBoundParams,
    empirical_covariance,
    lowertail_experiment,
    relative_lower_eigenvalue,
    theorem_main_bound,
)
from covtail.ols import OlsBoundParams, excess_loss, ols_bound, ols_experiment, ols_fit, vector_sum_experiment
from covtail.reporting import TrialReport, emit
from covtail.runner.registry import run, run_experiment
from covtail.sparse import ConeSpec, lasso_fit, restricted_eigenvalue, transfer_check

__all__ = [
    "ConeSpec",
    "LowerTailBoundParams",
    "OlsBoundParams",
    "TrialReport",
    "emit",
    "empirical_covariance",
    "excess_loss",
    "lasso_fit",
    "lowertail_experiment",
    "ols_bound",
    "ols_experiment",
    "ols_fit",
    "relative_lower_eigenvalue",
    "restricted_eigenvalue",
    "run",
    "run_experiment",
    "theorem_main_bound",
    "transfer_check",
    "vector_sum_experiment",
]
