"""Ordinary least squares with random design.

The excess loss of the OLS estimator is held to

    ((1+η)·tr Λ + c(η)·λ_max(Λ)·ln(3/δ)) / ((1−ε)²·n),   c(η) = (2+η)(4+3η)/(4η),

and the sum of the noise vectors Z_i = ε_i Σ^{-1/2} X_i to the vector-sum
tail bound with d_q(η) = (2+η)²q²/η².
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles import (
    EnsembleSpec,
    LinearModelSpec,
    SampleBatch,
    population_covariance,
    sample_linear_model,
)
from covtail.errors import CalibrationError, InputError
from covtail.linalg import (
    SymMatrix,
    as_sym,
    is_psd,
    op_norm_and_min_eig,
    psd_sqrt_pseudoinverse,
    range_projector,
)
from covtail.moments import exact_h, exact_hstar, gaussian_hstar
from covtail.reporting import TrialReport, TrialRow, frequency_passes
from covtail.runner.executor import run_trials
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

BETA_MIN_CALIBRATION_SAMPLES = 1_000_000
LOSS_TOL = 1e-12


def c_eta(eta: float) -> float:
    if eta <= 0:
        raise InputError(f"eta must be > 0, got {eta}")
    return (2.0 + eta) * (4.0 + 3.0 * eta) / (4.0 * eta)


def d_q(eta: float, q: float) -> float:
    if eta <= 0:
        raise InputError(f"eta must be > 0, got {eta}")
    return (2.0 + eta) ** 2 * q * q / (eta * eta)


def _in_unit_interval(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise InputError(f"{name} must lie in (0, 1), got {value}")


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise InputError(f"eta must lie in (0, 1], got {eta}")


@dataclass(frozen=True, eq=False)
class OlsBoundParams:
    eta: float
    epsilon: float
    delta: float
    lambda_matrix: SymMatrix
    n: int
    q: float = 2.0
    h: float = math.sqrt(3.0)
    h_star: float = 3.0

    def __post_init__(self) -> None:
        _check_eta(self.eta)
        _in_unit_interval("epsilon", self.epsilon)
        _in_unit_interval("delta", self.delta)
        if self.q < 2:
            raise InputError(f"q must be ≥ 2, got {self.q}")
        if self.n < 1:
            raise InputError(f"n must be ≥ 1, got {self.n}")
        lam = as_sym(self.lambda_matrix)
        if not is_psd(lam):
            raise InputError("Λ must be PSD")
        object.__setattr__(self, "lambda_matrix", lam)


@dataclass(frozen=True, eq=False)
class RegressionFit:
    beta_hat: NDArray[np.float64]
    beta_min: NDArray[np.float64] | None = None
    z: NDArray[np.float64] | None = None


@dataclass(frozen=True)
class SampleCondition:
    n: int
    moment_term: float
    tail_term: float
    literal_moment_term: float


def ols_fit(batch: SampleBatch) -> NDArray[np.float64]:
    """Minimal-norm minimiser of the empirical squared loss, Σ̂⁺(1/n ΣY_iX_i)."""
    if batch.responses is None:
        raise InputError("ols_fit needs a batch with responses")
    beta, *_ = np.linalg.lstsq(batch.vectors, batch.responses, rcond=None)
    return beta


def regression_fit(batch: SampleBatch, beta_min: ArrayLike | None = None, sigma: SymMatrix | None = None) -> RegressionFit:
    """OLS fit plus, when β_min and Σ are known, the vectors Z_i = ε_i Σ^{-1/2} X_i."""
    beta_hat = ols_fit(batch)
    if beta_min is None:
        return RegressionFit(beta_hat)
    beta_min = np.asarray(beta_min, dtype=np.float64)
    z = None
    if sigma is not None:
        residual = batch.responses - batch.vectors @ beta_min
        z = residual[:, None] * (batch.vectors @ np.asarray(psd_sqrt_pseudoinverse(sigma)))
    return RegressionFit(beta_hat, beta_min, z)


def excess_loss(beta_hat: ArrayLike, beta_min: ArrayLike, sigma: SymMatrix | ArrayLike) -> float:
    """ℓ(β̂) − ℓ(β_min) = (β̂−β_min)ᵀΣ(β̂−β_min)."""
    diff = np.asarray(beta_hat, dtype=np.float64) - np.asarray(beta_min, dtype=np.float64)
    sigma = as_sym(sigma)
    if diff.shape != (sigma.dim,):
        raise InputError(f"coefficient length {diff.shape} does not match Σ of dim {sigma.dim}")
    return max(sigma.quadratic_form(diff), 0.0)


def ols_bound(params: OlsBoundParams) -> float:
    lam = params.lambda_matrix
    lam_max, _ = op_norm_and_min_eig(lam)
    numerator = (1.0 + params.eta) * lam.trace() + c_eta(params.eta) * max(lam_max, 0.0) * math.log(3.0 / params.delta)
    return numerator / ((1.0 - params.epsilon) ** 2 * params.n)


def ols_sample_condition(
    p: int, delta: float, epsilon: float, eta: float, q: float, h: float, h_star: float
) -> SampleCondition:
    """Smallest n with n ≥ (49h²/ε²)(p + 2 ln(6/δ)) ∨ 6^{2/q}(2+η)²q²(h*+1)/(δ^{2/q}η²).

    The stated factor 49/(h²ε²) is reported as ``literal_moment_term``; the
    lower-tail margin 7h√(·) ≤ ε requires 49h²/ε², which is what is enforced.
    """
    _in_unit_interval("delta", delta)
    _in_unit_interval("epsilon", epsilon)
    log_term = p + 2.0 * math.log(6.0 / delta)
    moment = 49.0 * h * h / (epsilon * epsilon) * log_term
    literal = 49.0 / (h * h * epsilon * epsilon) * log_term
    tail = 6.0 ** (2.0 / q) * (2.0 + eta) ** 2 * q * q * (h_star + 1.0) / (delta ** (2.0 / q) * eta * eta)
    logger.debug("sample condition: 49h²/ε² reading %.6g, 49/(h²ε²) reading %.6g, tail term %.6g", moment, literal, tail)
    return SampleCondition(n=math.ceil(max(moment, tail)), moment_term=moment, tail_term=tail, literal_moment_term=literal)


def estimate_beta_min(
    sampler: Callable[[int, int], SampleBatch],
    samples: int = BETA_MIN_CALIBRATION_SAMPLES,
    seed: int = 0,
) -> NDArray[np.float64]:
    """β_min = Σ⁺E[YX] estimated by OLS on one large calibration batch."""
    return ols_fit(sampler(samples, seed))


# ----------------------------------------------------------------------
# Vector-sum lemma
# ----------------------------------------------------------------------


def _square_sum_events(z: NDArray[np.float64], trace: float, lam_max: float, alpha: float) -> tuple[bool, bool]:
    n = z.shape[0]
    partial = np.vstack([np.zeros(z.shape[1]), np.cumsum(z, axis=0)[:-1]])
    norms = np.linalg.norm(partial, axis=1)
    directions = np.divide(partial, norms[:, None], out=np.zeros_like(partial), where=norms[:, None] > 0)
    v_n = float(np.sum(np.einsum("ij,ij->i", directions, z) ** 2))
    squared_sum = float(np.einsum("ij,ij->", z, z))
    return squared_sum > (1 + alpha) * n * trace, v_n > (1 + alpha) * n * lam_max


def vector_sum_experiment(
    z_ensemble: EnsembleSpec,
    n: int,
    eta: float,
    t: float,
    *,
    q: float = 2.0,
    h_star: float | None = None,
    lambda_matrix: SymMatrix | ArrayLike | None = None,
    trials: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> TrialReport:
    """P(|ΣZ_j|/√n > √((1+η)trΛ + c(η)λ_max(Λ)t)) against e^{−t} + 2(d_q(η)(h*+1)/n)^{q/2}."""
    started = time.perf_counter()
    settings = get_settings()
    trials = settings.DEFAULT_TRIALS if trials is None else trials
    _check_eta(eta)
    if t < 0 or n < 1 or q < 2:
        raise InputError("need t ≥ 0, n ≥ 1 and q ≥ 2")

    lam = population_covariance(z_ensemble) if lambda_matrix is None else as_sym(lambda_matrix)
    if h_star is None:
        h_star = exact_hstar(z_ensemble, q)
    if h_star is None:
        raise InputError("h_star is not known in closed form for this ensemble; pass it explicitly")

    trace = lam.trace()
    lam_max = max(op_norm_and_min_eig(lam)[0], 0.0)
    threshold = math.sqrt((1 + eta) * trace + c_eta(eta) * lam_max * t)
    tail = min(1.0, 2.0 * (d_q(eta, q) * (h_star + 1.0) / n) ** (q / 2))
    probability = min(1.0, math.exp(-t) + tail)
    alpha = eta / (2.0 - eta)
    square_sum_bound = min(1.0, (q * q * (h_star + 1.0) / (alpha * alpha * n)) ** (q / 2))

    def one_trial(index: int, trial_seed: int) -> TrialRow:
        z = z_ensemble.draw(n, np.random.SeedSequence(trial_seed))
        statistic = float(np.linalg.norm(z.sum(axis=0)) / math.sqrt(n))
        sq = np.einsum("ij,ij->i", z, z)
        squares_event, v_event = _square_sum_events(z, trace, lam_max, alpha)
        return TrialRow(
            index,
            statistic,
            threshold,
            statistic > threshold,
            {
                "sq_mean": float(sq.mean()),
                "sq_se": float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                "squares_event": squares_event,
                "v_event": v_event,
            },
        )

    rows = run_trials(one_trial, trials, seed, workers)

    sq_mean = float(np.mean([r.extras["sq_mean"] for r in rows]))
    sq_se = float(math.sqrt(sum(r.extras["sq_se"] ** 2 for r in rows)) / len(rows))
    if sq_mean > trace + settings.CALIBRATION_SE * sq_se + 1e-12 * max(trace, 1.0):
        raise CalibrationError(
            f"sampled E|Z|² = {sq_mean:.6g} exceeds declared tr Λ = {trace:.6g} by more than "
            f"{settings.CALIBRATION_SE:g} standard errors ({sq_se:.3g})"
        )

    squares_freq = sum(r.extras["squares_event"] for r in rows) / len(rows)
    v_freq = sum(r.extras["v_event"] for r in rows) / len(rows)
    square_sums = {
        "alpha": alpha,
        "bound": square_sum_bound,
        "squares_frequency": squares_freq,
        "squares_ok": frequency_passes(squares_freq, square_sum_bound, len(rows)),
        "v_frequency": v_freq,
        "v_ok": frequency_passes(v_freq, square_sum_bound, len(rows)),
    }
    flags = [] if square_sums["squares_ok"] and square_sums["v_ok"] else ["square_sum_check_failed"]

    report = TrialReport.from_rows(
        "vector_sum",
        {"p": z_ensemble.dim, "n": n, "eta": eta, "t": t, "q": q, "h_star": h_star, "trials": trials, "seed": seed},
        rows,
        target_probability=probability,
        bound_value=threshold,
        flags=flags,
        extras={
            "probability_bound": probability,
            "trace_lambda": trace,
            "lambda_max": lam_max,
            "c_eta": c_eta(eta),
            "d_q": d_q(eta, q),
            "sampled_square_norm": sq_mean,
            "square_sums": square_sums,
        },
    )
    report.wall_clock = time.perf_counter() - started
    return report


# ----------------------------------------------------------------------
# OLS coverage experiment
# ----------------------------------------------------------------------


def noise_hstar(model: LinearModelSpec, q: float) -> float | None:
    """h* of Z = ε Σ^{-1/2} X for Gaussian noise: the noise factor times the design's own constant."""
    if model.noise_sigma == 0:
        return 1.0
    design = exact_hstar(model.design, q)
    return None if design is None else gaussian_hstar(q) * design


def ols_experiment(
    model: LinearModelSpec,
    n: int,
    *,
    eta: float,
    epsilon: float,
    delta: float,
    q: float = 2.0,
    h: float | None = None,
    h_star: float | None = None,
    trials: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> TrialReport:
    """Coverage of the OLS excess-loss bound, with mean excess loss against tr(Λ)/n."""
    started = time.perf_counter()
    trials = get_settings().DEFAULT_TRIALS if trials is None else trials
    sigma = population_covariance(model.design)
    lam = range_projector(sigma).scaled(model.noise_sigma**2)

    h = exact_h(model.design) if h is None else h
    h_star = noise_hstar(model, q) if h_star is None else h_star
    if h is None or h_star is None:
        raise InputError("h and h_star must be known for the design; pass them explicitly")

    params = OlsBoundParams(eta=eta, epsilon=epsilon, delta=delta, lambda_matrix=lam, n=n, q=q, h=h, h_star=h_star)
    bound = ols_bound(params)
    p = model.dim
    condition = ols_sample_condition(p, delta, epsilon, eta, q, h, h_star)
    regime_ok = n >= condition.n
    flags: list[str] = []
    if not regime_ok:
        flags.append("out_of_regime")
        logger.warning("n=%d is below the sample-size condition n ≥ %d; running anyway", n, condition.n)

    # roundoff floor for the noiseless model, where the bound is 0
    slack = LOSS_TOL * max(sigma.quadratic_form(model.beta_min), 1.0)

    def one_trial(index: int, trial_seed: int) -> TrialRow:
        batch = sample_linear_model(model, n, trial_seed)
        loss = excess_loss(ols_fit(batch), model.beta_min, sigma)
        return TrialRow(index, loss, bound, loss > bound + slack)

    rows = run_trials(one_trial, trials, seed, workers)

    losses = np.array([r.statistic for r in rows])
    lam_max = max(op_norm_and_min_eig(lam)[0], 0.0)
    benchmark = lam.trace() / n
    extras: dict[str, Any] = {
        "mean_excess": float(losses.mean()),
        "median_excess": float(np.median(losses)),
        "benchmark": benchmark,
        "ratio_to_benchmark": float(losses.mean() / benchmark) if benchmark > 0 else None,
        "ratio_to_lambda_max_p_over_n": float(losses.mean() / (lam_max * p / n)) if lam_max > 0 else None,
        "regime_ok": regime_ok,
        "sample_condition": {
            "n": condition.n,
            "moment_term": condition.moment_term,
            "literal_moment_term": condition.literal_moment_term,
            "tail_term": condition.tail_term,
        },
        "h": h,
        "h_star": h_star,
    }

    report = TrialReport.from_rows(
        "ols",
        {"p": p, "n": n, "eta": eta, "epsilon": epsilon, "delta": delta, "q": q,
         "noise_sigma": model.noise_sigma, "trials": trials, "seed": seed},
        rows,
        target_probability=delta,
        bound_value=bound,
        flags=flags,
        extras=extras,
    )
    report.wall_clock = time.perf_counter() - started
    return report
