"""Empirical covariance, the relative lower eigenvalue and the subgaussian lower-tail bound.

With probability at least 1 − δ, for every v,

    vᵀΣ̂_n v ≥ (1 − 7h·√((p + 2 ln(2/δ)) / n)) · vᵀΣv,

where h is the fourth-moment constant of X. The experiment draws batches,
measures the largest admissible factor (the least eigenvalue of the whitened
empirical covariance) and counts how often it falls below the bound.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles import EnsembleSpec, SampleBatch, population_covariance, sample_batch
from covtail.errors import InputError, RangeError
from covtail.linalg import SymMatrix, as_sym, range_basis
from covtail.moments import exact_h, h_empirical
from covtail.reporting import TrialReport, TrialRow
from covtail.runner.executor import run_trials
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

RANGE_TOL = 1e-8
CALIBRATION_SAMPLES = 100_000
TRUNCATION_FACTOR = 10.0


@dataclass(frozen=True)
class LowerTailBoundParams:
    p: int
    n: int
    delta: float
    h: float
    t: float | None = None
    R: float | None = None
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.p < 1 or self.n < 1:
            raise InputError(f"need p ≥ 1 and n ≥ 1, got p={self.p}, n={self.n}")
        if not 0.0 < self.delta < 1.0:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.h > 1.0:
            raise InputError(f"h must exceed 1, got {self.h}")
        if self.R is not None and self.R <= 0:
            raise InputError(f"truncation level R must be > 0, got {self.R}")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.t is not None and not math.isclose(self.delta, 2.0 * math.exp(-self.t), rel_tol=1e-9):
            raise InputError(f"delta={self.delta} does not match 2·exp(−t) for t={self.t}")

    @classmethod
    def from_t(cls, p: int, n: int, t: float, h: float) -> LowerTailBoundParams:
        """δ = 2e^{−t}."""
        return cls(p=p, n=n, delta=2.0 * math.exp(-t), h=h, t=t)

    @property
    def margin(self) -> float:
        return 7.0 * self.h * math.sqrt((self.p + 2.0 * math.log(2.0 / self.delta)) / self.n)

    @property
    def required_n(self) -> int | None:
        """Smallest n whose margin is at most ε: ⌈49h²(p + 2 ln(2/δ)) / ε²⌉."""
        if self.epsilon is None:
            return None
        return math.ceil(49.0 * self.h**2 * (self.p + 2.0 * math.log(2.0 / self.delta)) / self.epsilon**2)

    @property
    def meets_target(self) -> bool | None:
        return None if self.epsilon is None else self.margin <= self.epsilon


def empirical_covariance(batch: SampleBatch) -> SymMatrix:
    """Σ̂_n = (1/n) Σ X_i X_iᵀ."""
    x = batch.vectors
    return SymMatrix(x.T @ x / batch.n)


def whiten(
    sigma_hat: SymMatrix | ArrayLike, sigma: SymMatrix | ArrayLike
) -> tuple[SymMatrix, NDArray[np.float64]]:
    """Σ^{-1/2} Σ̂ Σ^{-1/2} expressed on range(Σ), plus the map x ↦ Λ^{-1/2}Uᵀx.

    Raises RangeError when Σ̂ has mass outside range(Σ).
    """
    sigma_hat, sigma = as_sym(sigma_hat), as_sym(sigma)
    if sigma_hat.dim != sigma.dim:
        raise InputError(f"dimension mismatch: {sigma_hat.dim} vs {sigma.dim}")
    values, basis = range_basis(sigma)
    if values.size == 0:
        raise InputError("sigma is zero; the relative eigenvalue is undefined")

    sh = np.asarray(sigma_hat)
    outside = sh - basis @ (basis.T @ sh)
    leak = float(np.trace(outside - (outside @ basis) @ basis.T))
    if leak > RANGE_TOL * max(float(np.trace(sh)), float(values.max())):
        raise RangeError(f"sigma_hat has mass {leak:.3e} outside range(sigma)")

    transform = basis / np.sqrt(values)
    return SymMatrix(transform.T @ sh @ transform), transform


def relative_lower_eigenvalue(sigma_hat: SymMatrix | ArrayLike, sigma: SymMatrix | ArrayLike) -> float:
    """inf over {v : vᵀΣv > 0} of vᵀΣ̂v / vᵀΣv."""
    whitened, _ = whiten(sigma_hat, sigma)
    return float(np.linalg.eigvalsh(np.asarray(whitened))[0])


def theorem_main_bound(params: LowerTailBoundParams) -> float:
    """1 − 7h√((p + 2 ln(2/δ))/n); non-positive values are vacuous."""
    return 1.0 - params.margin


def truncate_psd(b: SymMatrix | ArrayLike, level: float) -> SymMatrix:
    """B^R = min(1, R / tr B)·B, and 0 when tr B = 0."""
    if not level > 0:
        raise InputError(f"truncation level must be > 0, got {level}")
    b = as_sym(b)
    trace = b.trace()
    if trace <= 0:
        return SymMatrix(np.zeros((b.dim, b.dim)))
    return b.scaled(min(1.0, level / trace))


def truncation_level_default(h: float, p: int) -> float:
    """R = 10·h²·p, so the truncation bias h²p/R is 1/10."""
    return TRUNCATION_FACTOR * h * h * p


def _truncation_stats(
    whitened_rows: NDArray[np.float64], level: float, rng: np.random.Generator
) -> dict[str, Any]:
    """Truncation diagnostics on rank-one B_i = Y_iY_iᵀ of one batch."""
    k = whitened_rows.shape[1]
    v = rng.standard_normal(k)
    v /= np.linalg.norm(v)

    traces = np.einsum("ij,ij->i", whitened_rows, whitened_rows)
    factor = np.where(traces > 0, np.minimum(1.0, level / np.where(traces > 0, traces, 1.0)), 0.0)
    quad = (whitened_rows @ v) ** 2
    quad_trunc = factor * quad
    tr_trunc_sq = (factor * traces) ** 2
    n = whitened_rows.shape[0]

    return {
        "pointwise_ok": bool(np.all(quad_trunc <= quad * (1 + 1e-12) + 1e-300)),
        "quad_mean": float(quad_trunc.mean()),
        "quad_se": float(quad_trunc.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        "trace_sq_mean": float(tr_trunc_sq.mean()),
        "trace_sq_se": float(tr_trunc_sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
    }


def _pool(rows: list[TrialRow], key: str) -> tuple[float, float]:
    means = np.array([r.extras[f"{key}_mean"] for r in rows])
    ses = np.array([r.extras[f"{key}_se"] for r in rows])
    return float(means.mean()), float(math.sqrt(np.sum(ses**2)) / len(rows))


def lowertail_experiment(
    ensemble: EnsembleSpec,
    n: int,
    delta: float,
    *,
    sigma: SymMatrix | ArrayLike | None = None,
    h: float | None = None,
    trials: int | None = None,
    seed: int = 0,
    workers: int = 1,
    truncation_level: float | None = None,
    epsilon: float | None = None,
) -> TrialReport:
    """Monte Carlo coverage of the lower-tail bound.

    ``h=None`` takes the ensemble's closed-form constant; when none exists the
    run estimates h from a calibration batch and is flagged "calibrated".
    A target deficit ``epsilon`` adds the sample size at which the margin
    reaches it.
    """
    started = time.perf_counter()
    settings = get_settings()
    trials = settings.DEFAULT_TRIALS if trials is None else trials
    if trials < 1:
        raise InputError("trials must be ≥ 1")
    sigma = population_covariance(ensemble) if sigma is None else as_sym(sigma)
    p = ensemble.dim
    flags: list[str] = []

    h_source = "given"
    if h is None:
        h = exact_h(ensemble)
        h_source = "exact"
    if h is None:
        calibration = sample_batch(ensemble, CALIBRATION_SAMPLES, np.random.SeedSequence([seed, 2**32]))
        h = max(h_empirical(calibration, sigma, seed=seed), 1.0 + 1e-9)
        h_source = "calibrated"
        flags.append("calibrated")
        logger.warning("no closed-form h for this ensemble; running with estimated h=%.4g (calibrated)", h)

    rank = range_basis(sigma)[0].size
    params = LowerTailBoundParams(p=rank, n=n, delta=delta, h=h, epsilon=epsilon)
    bound = theorem_main_bound(params)
    vacuous = bound <= 0
    if vacuous:
        flags.append("vacuous")
        logger.warning("lower-tail bound %.4g is vacuous at n=%d (p=%d, h=%.4g)", bound, n, rank, h)
    level = truncation_level if truncation_level is not None else truncation_level_default(h, rank)

    def one_trial(index: int, trial_seed: int) -> TrialRow:
        batch = sample_batch(ensemble, n, trial_seed)
        whitened, transform = whiten(empirical_covariance(batch), sigma)
        relmin = float(np.linalg.eigvalsh(np.asarray(whitened))[0])
        stats = _truncation_stats(batch.vectors @ transform, level, np.random.default_rng([trial_seed, 1]))
        return TrialRow(index, relmin, bound, relmin < bound, stats)

    rows = run_trials(one_trial, trials, seed, workers)

    relmins = np.array([r.statistic for r in rows])
    quad_mean, quad_se = _pool(rows, "quad")
    trace_mean, trace_se = _pool(rows, "trace_sq")
    n_se = settings.PASS_SE
    truncation = {
        "level": level,
        "pointwise_ok": all(r.extras["pointwise_ok"] for r in rows),
        "quad_mean": quad_mean,
        "quad_lower_bound": 1.0 - h * h * rank / level,
        "quad_ok": quad_mean >= 1.0 - h * h * rank / level - n_se * quad_se,
        "trace_sq_mean": trace_mean,
        "trace_sq_upper_bound": h * h * rank * rank,
        "trace_sq_ok": trace_mean <= h * h * rank * rank + n_se * trace_se,
    }
    if not (truncation["pointwise_ok"] and truncation["quad_ok"] and truncation["trace_sq_ok"]):
        flags.append("truncation_check_failed")
        logger.warning("truncation diagnostics failed: %s", truncation)

    report = TrialReport.from_rows(
        "lowertail",
        {"p": p, "rank": rank, "n": n, "delta": delta, "h": h, "epsilon": epsilon, "trials": trials, "seed": seed},
        rows,
        target_probability=delta,
        bound_value=bound,
        vacuous=vacuous,
        flags=flags,
        extras={
            "h_source": h_source,
            "mean_relmin": float(relmins.mean()),
            "min_relmin": float(relmins.min()),
            "mean_margin": float((relmins - bound).mean()),
            "min_margin": float((relmins - bound).min()),
            "truncation": truncation,
            "required_n": params.required_n,
            "meets_target": params.meets_target,
        },
    )
    report.wall_clock = time.perf_counter() - started
    return report
