"""Monte Carlo experiments for restricted eigenvalues, the transfer principle and LASSO rates."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence

import numpy as np

from covtail.ensembles import (
    EnsembleSpec,
    LinearModelSpec,
    make_rng,
    population_covariance,
    sample_batch,
    sample_linear_model,
    trial_seed,
)
from covtail.errors import InputError
from covtail.linalg import SymMatrix
from covtail.lowertail import empirical_covariance
from covtail.moments import coordinate_hstar, exact_h, h_empirical
from covtail.reporting import TrialReport, TrialRow
from covtail.runner.executor import run_trials
from covtail.settings import get_settings
from covtail.sparse.cone import ConeSpec, cone_membership, cone_probes
from covtail.sparse.design import inverse_sqrt_diagonal, normalize_design
from covtail.sparse.lasso import lasso_coordinate_descent, lasso_lambda
from covtail.sparse.restricted import restricted_eigenvalue
from covtail.sparse.transfer import (
    random_rudelson_instance,
    random_rudelson_sigma,
    random_transfer_instance,
    rudelson_check,
    rudelson_sparsity,
    transfer_check,
)

logger = logging.getLogger(__name__)

EXPERIMENT_RESTARTS = 8
SPARSE_REGIME_ATTEMPTS = 8
# σ plugged into the λ schedule and the σ²s·log p/n benchmark when the data carry no noise.
NOISELESS_LAMBDA_SIGMA = 1e-4
CALIBRATION_SAMPLES = 100_000
CONE_ALPHA = 3.0


def theorem_re_constants(alpha: float, epsilon: float, h: float) -> tuple[float, float]:
    """(α̃, C) = (α√((1+ε)/(1−ε)), 784(1+ε)(1+α)²h²)."""
    if not 0.0 <= epsilon < 1.0:
        raise InputError(f"epsilon must lie in [0, 1), got {epsilon}")
    alpha_tilde = alpha * math.sqrt((1.0 + epsilon) / (1.0 - epsilon))
    return alpha_tilde, 784.0 * (1.0 + epsilon) * (1.0 + alpha) ** 2 * h * h


def intermediate_sparsity(n: int, epsilon: float, h: float, p: int, delta: float) -> int:
    """d = ⌊ε²n / (196h²(1 + 2 ln(p/4δ)))⌋."""
    return math.floor(epsilon**2 * n / (196.0 * h * h * (1.0 + 2.0 * math.log(p / (4.0 * delta)))))


def diag_plus_failure_bound(s: int, epsilon: float, q: float, h_star: float, n: int) -> float:
    """P(D̂[j,j] > (1+ε)D[j,j] for some j ∈ S) ≤ ((2qh*)²s^{2/q} / (ε²n))^{q/2}, capped at 1."""
    return min(1.0, ((2.0 * q * h_star) ** 2 * s ** (2.0 / q) / (epsilon**2 * n)) ** (q / 2.0))


def theorem_re_sample_condition(
    p: int, s: int, delta: float, epsilon: float, q: float, h: float, alpha: float, re_pop: float
) -> int:
    """n ≥ C(1 + 2 ln(p/4δ))s / (re²ε⁴) ∨ 4q²3^{2/q}s^{2/q} / δ^{2/q}."""
    _, big_c = theorem_re_constants(alpha, epsilon, h)
    first = big_c * (1.0 + 2.0 * math.log(p / (4.0 * delta))) * s / (re_pop**2 * epsilon**4)
    second = 4.0 * q * q * 3.0 ** (2.0 / q) * s ** (2.0 / q) / delta ** (2.0 / q)
    return math.ceil(max(first, second))


def theorem_re_experiment(
    ensemble: EnsembleSpec,
    cone: ConeSpec,
    epsilon: float,
    delta: float,
    n: int,
    *,
    q: float = 4.0,
    h: float | None = None,
    h_star: float | None = None,
    trials: int | None = None,
    seed: int = 0,
    workers: int = 1,
    probes: int = 200,
    restarts: int = EXPERIMENT_RESTARTS,
) -> TrialReport:
    """Joint frequency of the cone transfer, quadratic-form and normalized-RE events.

    C1 is read with square roots: D̂^{1/2}x ∈ 𝒞(S, α) ⇒ D₂^{1/2}x ∈ 𝒞(S, α̃).
    ``h_star`` bounds the per-coordinate 2q-vs-2 moment ratio and sets the
    allowance for the diagonal upper deviation on S; when omitted the
    closed form is used where one exists.
    """
    started = time.perf_counter()
    trials = get_settings().DEFAULT_TRIALS if trials is None else trials
    for name, value in (("epsilon", epsilon), ("delta", delta)):
        if not 0.0 < value < 0.5:
            raise InputError(f"{name} must lie in (0, 1/2), got {value}")
    if q <= 2:
        raise InputError(f"q must exceed 2, got {q}")
    p = ensemble.dim
    on, _ = cone.split(p)
    flags: list[str] = []

    sigma = population_covariance(ensemble)
    diag_pop = sigma.diag()
    if h is None:
        h = exact_h(ensemble)
    if h is None:
        calibration = sample_batch(ensemble, CALIBRATION_SAMPLES, np.random.SeedSequence([seed, 2**32]))
        h = max(h_empirical(calibration, sigma, seed=seed, max_support=min(n, p)), 1.0 + 1e-9)
        flags.append("calibrated")
        logger.warning("no closed-form h; estimated h=%.4g on %d-sparse directions", h, min(n, p))

    if h_star is None:
        h_star = coordinate_hstar(ensemble, q)
    if h_star is not None and not h_star >= 1.0:
        raise InputError(f"h_star must be ≥ 1, got {h_star}")
    diag_bound = None if h_star is None else diag_plus_failure_bound(cone.s, epsilon, q, h_star, n)
    if diag_bound is None:
        logger.info("no per-coordinate h*; skipping the diagonal upper-deviation check")

    alpha_tilde, big_c = theorem_re_constants(cone.alpha, epsilon, h)
    wide = cone.with_alpha(alpha_tilde)
    re_pop = restricted_eigenvalue(normalize_design(sigma), wide, restarts, seed, workers).value
    vacuous = re_pop <= 1e-12
    condition = None
    if vacuous:
        flags.append("inapplicable")
        logger.warning("re(X, S, α̃) = 0: the restricted-eigenvalue guarantee does not apply")
    else:
        condition = theorem_re_sample_condition(p, cone.s, delta, epsilon, q, h, cone.alpha, re_pop)
        if n < condition:
            flags.append("out_of_regime")
            logger.warning("n=%d is below the sample-size condition n ≥ %d; running anyway", n, condition)

    def one_trial(index: int, tseed: int) -> TrialRow:
        batch = sample_batch(ensemble, n, tseed)
        sigma_hat = empirical_covariance(batch)
        diag_hat = sigma_hat.diag()
        root_hat = np.sqrt(diag_hat)

        y = cone_probes(cone, p, probes, make_rng(trial_seed(tseed, 1)))
        x = np.where(diag_hat > 0, y * inverse_sqrt_diagonal(diag_hat), y)
        x = x[np.array([cone_membership(row * root_hat, cone) for row in x], dtype=bool)]
        c1 = all(cone_membership(row * np.sqrt(diag_pop), wide) for row in x)
        quad_hat = np.einsum("ij,jk,ik->i", x, np.asarray(sigma_hat), x)
        quad = np.einsum("ij,jk,ik->i", x, np.asarray(sigma), x)
        c2 = bool(np.all(quad_hat >= (1.0 - epsilon) ** 2 * quad - 1e-12 * np.maximum(quad, 1.0)))
        re_hat = restricted_eigenvalue(normalize_design(sigma_hat), cone, restarts, tseed).value
        c3 = re_hat >= (1.0 - epsilon) * re_pop - 1e-9

        extras = {
            "c1": c1,
            "c2": c2,
            "c3": c3,
            "diag_minus": bool(np.all(diag_hat >= (1.0 - epsilon) * diag_pop)),
            "diag_plus": bool(np.all(diag_hat[on] <= (1.0 + epsilon) * diag_pop[on])),
        }
        return TrialRow(index, re_hat, (1.0 - epsilon) * re_pop, not (c1 and c2 and c3), extras)

    rows = run_trials(one_trial, trials, seed, workers)

    def share(key: str) -> float:
        return sum(bool(r.extras[key]) for r in rows) / len(rows)

    diag_failure = 1.0 - share("diag_plus")
    diag_ok = None
    if diag_bound is not None:
        se = math.sqrt(diag_bound * (1.0 - diag_bound) / len(rows))
        diag_ok = diag_failure <= diag_bound + get_settings().PASS_SE * se
        if not diag_ok:
            flags.append("diag_plus_check_failed")
            logger.warning("diagonal deviation frequency %.4g exceeds its bound %.4g", diag_failure, diag_bound)

    report = TrialReport.from_rows(
        "re",
        {"p": p, "n": n, "support": cone.one_based(), "alpha": cone.alpha, "epsilon": epsilon,
         "delta": delta, "q": q, "h": h, "h_star": h_star, "trials": trials, "seed": seed},
        rows,
        target_probability=delta,
        bound_value=(1.0 - epsilon) * re_pop,
        vacuous=vacuous,
        flags=flags,
        extras={
            "alpha_tilde": alpha_tilde,
            "C": big_c,
            "re_population": re_pop,
            "sample_condition": condition,
            "intermediate_d": intermediate_sparsity(n, epsilon, h, p, delta),
            "c1_frequency": share("c1"),
            "c2_frequency": share("c2"),
            "c3_frequency": share("c3"),
            "diag_minus_frequency": share("diag_minus"),
            "diag_plus_frequency": share("diag_plus"),
            "diag_plus_failure_bound": diag_bound,
            "diag_plus_ok": diag_ok,
            "mean_re_hat": float(np.mean([r.statistic for r in rows])),
        },
    )
    report.wall_clock = time.perf_counter() - started
    return report


# ----------------------------------------------------------------------
# LASSO rate sweep
# ----------------------------------------------------------------------


def lasso_rate_experiment(
    ensemble: EnsembleSpec,
    n_grid: Sequence[int],
    *,
    s: int,
    noise_sigma: float = 1.0,
    support: Sequence[int] | None = None,
    beta_scale: float = 1.0,
    kappa: float | None = None,
    trials: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> TrialReport:
    """Prediction error |Σ̂^{1/2}(β̂ − β_min)|² of the normalized-design LASSO across sample sizes.

    Passes when the log-log slope of the median error against n is −1 ± 0.3
    (noisy runs only) and β̂ − β_min ∈ 𝒞(S, 3) in at least 90% of trials at
    the largest n.

    Noiseless data keep a positive λ by running the schedule at
    σ = NOISELESS_LAMBDA_SIGMA, reported as ``lambda_sigma``.
    """
    started = time.perf_counter()
    trials = get_settings().DEFAULT_TRIALS if trials is None else trials
    grid = sorted(int(n) for n in n_grid)
    if not grid or grid[0] < 1:
        raise InputError("n_grid must list positive sample sizes")
    p = ensemble.dim
    cone = ConeSpec(tuple(range(s)) if support is None else tuple(support), CONE_ALPHA)
    on, _ = cone.split(p)
    beta_min = np.zeros(p)
    beta_min[on] = beta_scale
    model = LinearModelSpec(ensemble, beta_min, noise_sigma)
    lambda_sigma = noise_sigma if noise_sigma > 0 else NOISELESS_LAMBDA_SIGMA

    def one_trial(index: int, tseed: int) -> TrialRow:
        n = grid[index // trials]
        batch = sample_linear_model(model, n, tseed)
        diag_hat = np.mean(batch.vectors**2, axis=0)
        scale = inverse_sqrt_diagonal(diag_hat)
        lam = lasso_lambda(lambda_sigma, p, n, kappa)
        fit = lasso_coordinate_descent(batch.vectors * scale, batch.responses, lam)
        diff = fit.beta * scale - beta_min
        error = float(np.mean((batch.vectors @ diff) ** 2))
        member = cone_membership(diff * np.sqrt(diag_hat), cone)
        benchmark = lambda_sigma**2 * s * math.log(p) / n
        return TrialRow(index, error, benchmark, not member,
                        {"n": n, "lambda": lam, "degenerate": bool(np.any(diag_hat == 0))})

    rows = run_trials(one_trial, trials * len(grid), seed, workers)

    per_n = []
    for i, n in enumerate(grid):
        block = rows[i * trials : (i + 1) * trials]
        errors = np.array([r.statistic for r in block])
        per_n.append({
            "n": n,
            "median_error": float(np.median(errors)),
            "mean_error": float(errors.mean()),
            "cone_fraction": sum(not r.violated for r in block) / len(block),
            "lambda": block[0].extras["lambda"],
            "benchmark": block[0].bound,
        })

    medians = np.array([row["median_error"] for row in per_n])
    slope = None
    if len(grid) > 1 and np.all(medians > 0):
        slope = float(np.polyfit(np.log(grid), np.log(medians), 1)[0])
    envelope = max(row["median_error"] / row["benchmark"] for row in per_n)
    cone_ok = per_n[-1]["cone_fraction"] >= 0.9
    slope_ok = noise_sigma == 0 or (slope is not None and abs(slope + 1.0) <= 0.3)

    flags = ["degenerate_diagonal"] if any(r.extras["degenerate"] for r in rows) else []
    report = TrialReport.from_rows(
        "lasso_rate",
        {"p": p, "s": s, "n_grid": grid, "noise_sigma": noise_sigma, "lambda_sigma": lambda_sigma,
         "kappa": kappa or get_settings().LASSO_KAPPA, "support": cone.one_based(), "trials": trials, "seed": seed},
        rows,
        target_probability=None,
        flags=flags,
        extras={"per_n": per_n, "slope": slope, "envelope_constant": envelope, "cone_ok": cone_ok, "slope_ok": slope_ok},
    )
    report.passed = bool(cone_ok and slope_ok)
    report.wall_clock = time.perf_counter() - started
    return report


# ----------------------------------------------------------------------
# Randomized counterexample searches
# ----------------------------------------------------------------------


def transfer_search(
    instances: int = 1000,
    p_max: int = 10,
    d_values: Sequence[int] = (2, 3),
    probes: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> TrialReport:
    """Random instances with an exhaustively verified premise; any probe violation fails the run."""
    started = time.perf_counter()

    def one_instance(index: int, tseed: int) -> TrialRow:
        rng = make_rng(tseed)
        d = int(d_values[index % len(d_values)])
        p = int(rng.integers(d + 1, max(p_max, d + 1) + 1))
        eta = float(rng.uniform(0.05, 0.5))
        sigma_hat, sigma, diagonal = random_transfer_instance(rng, p, d, eta)
        result = transfer_check(sigma_hat, sigma, eta, d, diagonal, probes, tseed)
        violated = not (result.premise_holds and result.premise_exhaustive and result.violations == 0)
        return TrialRow(index, result.min_margin, 0.0, violated,
                        {"p": p, "d": d, "eta": eta, "violations": result.violations,
                         "premise_holds": result.premise_holds, "witnesses": result.witnesses})

    rows = run_trials(one_instance, instances, seed, workers)
    report = TrialReport.from_rows(
        "transfer",
        {"instances": instances, "p_max": p_max, "d_values": list(d_values), "probes": probes, "seed": seed},
        rows,
        target_probability=None,
        bound_value=0.0,
        extras={"min_margin": min(r.statistic for r in rows)},
    )
    report.wall_clock = time.perf_counter() - started
    return report


def _rudelson_level(sigma: SymMatrix, cone: ConeSpec, epsilon: float, gamma: float, seed: int, restarts: int) -> int:
    re_value = restricted_eigenvalue(sigma, cone, restarts, seed).value
    return rudelson_sparsity(cone.s, cone.alpha, epsilon, gamma, float(sigma.diag().max()), re_value).d


def _sparse_regime_sigma(
    rng: np.random.Generator, cone: ConeSpec, epsilon: float, gamma: float, seed: int, restarts: int
) -> tuple[SymMatrix, int]:
    """Σ whose dimension sits one or two above the sparsity level it induces."""
    d = rudelson_sparsity(cone.s, cone.alpha, epsilon, gamma, 1.0, 1.0).d
    for _ in range(SPARSE_REGIME_ATTEMPTS):
        sigma = random_rudelson_sigma(rng, d + int(rng.integers(1, 3)))
        d = _rudelson_level(sigma, cone, epsilon, gamma, seed, restarts)
        if 0 < sigma.dim - d <= 2:
            break
    return sigma, d


def rudelson_search(
    instances: int = 200,
    p_max: int = 8,
    epsilon: float = 0.2,
    gamma: float = 0.1,
    probes: int = 2000,
    seed: int = 0,
    workers: int = 1,
    restarts: int = EXPERIMENT_RESTARTS,
) -> TrialReport:
    """Constructed instances meeting the sparse and diagonal hypotheses; every conclusion must hold.

    Even instances draw p ≤ p_max, below the sparsity level d, so the order
    Σ̂ ⪰ (1−ε)Σ holds globally. Odd instances take p just above d and a Σ̂
    that violates the global order while keeping it on d-sparse vectors.
    """
    started = time.perf_counter()

    def one_instance(index: int, tseed: int) -> TrialRow:
        rng = make_rng(tseed)
        if index % 2:
            cone = ConeSpec((0,), float(rng.choice([0.5, 1.0])))
            sigma, d = _sparse_regime_sigma(rng, cone, epsilon, gamma, tseed, restarts)
        else:
            p = int(rng.integers(3, p_max + 1))
            size = int(rng.integers(1, min(3, p - 1) + 1))
            cone = ConeSpec(tuple(rng.choice(p, size=size, replace=False).tolist()), float(rng.choice([1.0, 3.0])))
            sigma = random_rudelson_sigma(rng, p)
            d = _rudelson_level(sigma, cone, epsilon, gamma, tseed, restarts)
        sigma_hat = random_rudelson_instance(rng, sigma, epsilon, gamma, d)
        result = rudelson_check(sigma_hat, sigma, cone, epsilon, gamma, probes, tseed, restarts)
        ratio = (result.re_sigma_hat or 0.0) / result.re_sigma if result.re_sigma > 0 else 0.0
        return TrialRow(index, ratio, 1.0 - epsilon, not (result.precondition_met and result.passed),
                        {"p": sigma.dim, "support": cone.one_based(), "alpha": cone.alpha, "d": result.d,
                         "literal_d": result.literal_d, "precondition_met": result.precondition_met,
                         "global_order_holds": result.details.get("global_order_holds")})

    rows = run_trials(one_instance, instances, seed, workers)
    report = TrialReport.from_rows(
        "rudelson",
        {"instances": instances, "p_max": p_max, "epsilon": epsilon, "gamma": gamma, "probes": probes, "seed": seed},
        rows,
        target_probability=None,
        bound_value=1.0 - epsilon,
        extras={"sparse_only_instances": sum(r.extras["global_order_holds"] is False for r in rows)},
    )
    report.wall_clock = time.perf_counter() - started
    return report
