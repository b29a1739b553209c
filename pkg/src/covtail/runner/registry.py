"""Dispatch from a validated ExperimentConfig to the experiment that produces its report."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from covtail.concentration import bdg_moment_check, concentration_suite, identity_suite
from covtail.ensembles import LinearModelSpec, ScalarLaw, ensemble_from_config, trial_seed
from covtail.lowertail import lowertail_experiment
from covtail.ols import ols_experiment, vector_sum_experiment
from covtail.reporting import TrialReport
from covtail.runner.config import (
    ConcentrationParams,
    ExperimentConfig,
    LassoRateParams,
    LowertailParams,
    OlsParams,
    ReParams,
    RudelsonParams,
    TransferParams,
    VectorSumParams,
    VerifyIdentitiesParams,
    apply_overrides,
    load_config,
    validate_config,
)
from covtail.runner.executor import resolve_workers
from covtail.sparse import lasso_rate_experiment, rudelson_search, theorem_re_experiment, transfer_search

logger = logging.getLogger(__name__)

Runner = Callable[[object, ExperimentConfig, int], TrialReport]


def _lowertail(params: LowertailParams, config: ExperimentConfig, workers: int) -> TrialReport:
    return lowertail_experiment(
        ensemble_from_config(params.ensemble),
        params.n,
        params.delta,
        sigma=params.sigma,
        h=params.h,
        trials=config.trials,
        seed=config.master_seed,
        workers=workers,
        truncation_level=params.truncation_level,
        epsilon=params.epsilon,
    )


def _ols(params: OlsParams, config: ExperimentConfig, workers: int) -> TrialReport:
    design = ensemble_from_config(params.design)
    beta = np.ones(design.dim) if params.beta_min is None else np.asarray(params.beta_min)
    return ols_experiment(
        LinearModelSpec(design, beta, params.noise_sigma),
        params.n,
        eta=params.eta,
        epsilon=params.epsilon,
        delta=params.delta,
        q=params.q,
        h=params.h,
        h_star=params.h_star,
        trials=config.trials,
        seed=config.master_seed,
        workers=workers,
    )


def _vector_sum(params: VectorSumParams, config: ExperimentConfig, workers: int) -> TrialReport:
    return vector_sum_experiment(
        ensemble_from_config(params.ensemble),
        params.n,
        params.eta,
        params.t,
        q=params.q,
        h_star=params.h_star,
        lambda_matrix=params.lambda_matrix,
        trials=config.trials,
        seed=config.master_seed,
        workers=workers,
    )


def _re(params: ReParams, config: ExperimentConfig, workers: int) -> TrialReport:
    return theorem_re_experiment(
        ensemble_from_config(params.ensemble),
        params.cone.to_spec(),
        params.epsilon,
        params.delta,
        params.n,
        q=params.q,
        h=params.h,
        h_star=params.h_star,
        trials=config.trials,
        seed=config.master_seed,
        workers=workers,
        probes=params.probes,
        restarts=params.restarts,
    )


def _rudelson(params: RudelsonParams, config: ExperimentConfig, workers: int) -> TrialReport:
    return rudelson_search(
        instances=config.trials or params.instances,
        p_max=params.p_max,
        epsilon=params.epsilon,
        gamma=params.gamma,
        probes=params.probes,
        seed=config.master_seed,
        workers=workers,
        restarts=params.restarts,
    )


def _transfer(params: TransferParams, config: ExperimentConfig, workers: int) -> TrialReport:
    return transfer_search(
        instances=config.trials or params.instances,
        p_max=params.p_max,
        d_values=params.d_values,
        probes=params.probes,
        seed=config.master_seed,
        workers=workers,
    )


def _lasso_rate(params: LassoRateParams, config: ExperimentConfig, workers: int) -> TrialReport:
    support = None if params.support is None else [j - 1 for j in params.support]
    return lasso_rate_experiment(
        ensemble_from_config(params.ensemble),
        params.n_grid,
        s=params.s,
        noise_sigma=params.noise_sigma,
        support=support,
        beta_scale=params.beta_scale,
        kappa=params.kappa,
        trials=config.trials,
        seed=config.master_seed,
        workers=workers,
    )


def _verify_identities(params: VerifyIdentitiesParams, config: ExperimentConfig, workers: int) -> TrialReport:
    started = time.perf_counter()
    checks = identity_suite(config.master_seed, params.draws, params.instances)
    checks += [
        bdg_moment_check(ScalarLaw.rademacher(), 2.0, 100, params.bdg_trials, config.master_seed, workers),
        bdg_moment_check(ScalarLaw.exponential(1.0), 3.0, 100, params.bdg_trials, trial_seed(config.master_seed, 1), workers),
    ]
    report = TrialReport.from_checks("verify_identities", params.model_dump(), checks)
    report.wall_clock = time.perf_counter() - started
    return report


def _concentration(params: ConcentrationParams, config: ExperimentConfig, workers: int) -> TrialReport:
    started = time.perf_counter()
    trials = config.trials or 100_000
    checks = concentration_suite(config.master_seed, trials, workers)
    report = TrialReport.from_checks("concentration", {"trials": trials}, checks)
    report.wall_clock = time.perf_counter() - started
    return report


RUNNERS: dict[str, Runner] = {
    "lowertail": _lowertail,
    "ols": _ols,
    "vector_sum": _vector_sum,
    "re": _re,
    "rudelson": _rudelson,
    "transfer": _transfer,
    "lasso_rate": _lasso_rate,
    "verify_identities": _verify_identities,
    "concentration": _concentration,
}


def run(config: ExperimentConfig, workers: int | str | None = None) -> TrialReport:
    """Run one experiment; ``workers`` overrides the config and never changes a number."""
    params = config.typed_params()
    count = resolve_workers(config.workers if workers is None else workers)
    logger.info("running %s with master seed %d on %d worker(s)", config.experiment, config.master_seed, count)
    report = RUNNERS[config.experiment](params, config, count)
    report.extras["config"] = config.echo()
    if report.passed is False:
        logger.warning("%s: statistical check failed (frequency %.4g)", config.experiment, report.frequency)
    return report


def run_experiment(
    config: ExperimentConfig | dict[str, Any] | str | Path,
    overrides: Sequence[str] = (),
    workers: int | str | None = None,
) -> TrialReport:
    """
    Validate a configuration and run the experiment it names.

    This is the programmatic counterpart of ``covtail run``.

    Args:
        config: A validated ExperimentConfig, a raw config mapping, or the
                path of a JSON config file.
        overrides: Dotted ``key=value`` assignments applied before
                   validation, as with ``--set``.
        workers: Worker threads or "auto"; defaults to the config's value.
                 COVTAIL_WORKERS in the environment takes precedence.

    Returns:
        The TrialReport. Its numbers depend only on the config and the
        master seed, never on the worker count.

    Example:
        >>> from covtail import run_experiment
        >>> report = run_experiment({
        ...     "experiment": "lowertail",
        ...     "params": {"ensemble": {"kind": "gaussian", "dim": 4}, "n": 50000, "delta": 0.1, "h": 6},
        ...     "trials": 200,
        ... })
        >>> report.bound_value
        0.4063...
    """
    if not isinstance(config, ExperimentConfig):
        raw = load_config(config) if isinstance(config, (str, Path)) else dict(config)
        config = validate_config(apply_overrides(raw, list(overrides)))
    elif overrides:
        config = validate_config(apply_overrides(config.model_dump(), list(overrides)))
    return run(config, workers)
