"""Monte Carlo verifiers for the lower-tail, supermartingale and BDG inequalities.

Each verifier is held to ``bound + PASS_SE`` binomial (or delta-method)
standard errors and reports rather than raises when the bound is exceeded.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from covtail.ensembles import ScalarLaw
from covtail.errors import InputError, InvalidMomentsError
from covtail.reporting import CheckReport, binomial_se, frequency_passes
from covtail.runner.executor import run_blocks
from covtail.settings import get_settings


@dataclass(frozen=True, eq=False)
class MartingalePath:
    """Paths N_0..N_n (last axis) with N_0 = 0 and the predictable variances E[D_i² | 𝒢_{i−1}].

    Leading axes index independent paths, so one instance may hold a batch.
    """

    values: NDArray[np.float64]
    predictable_variance: NDArray[np.float64] | None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 0 or values.shape[-1] < 1:
            raise InputError("a martingale path needs at least N_0")
        if np.any(values[..., 0] != 0):
            raise InputError("martingale paths must start at N_0 = 0")
        object.__setattr__(self, "values", values)
        if self.predictable_variance is not None:
            pv = np.asarray(self.predictable_variance, dtype=np.float64)
            if pv.shape != values.shape[:-1] + (values.shape[-1] - 1,):
                raise InputError(
                    f"predictable variances have shape {pv.shape}, expected one per increment"
                )
            object.__setattr__(self, "predictable_variance", pv)

    @property
    def steps(self) -> int:
        return self.values.shape[-1] - 1

    @property
    def increments(self) -> NDArray[np.float64]:
        return np.diff(self.values, axis=-1)

    def quadratic_variation(self) -> NDArray[np.float64]:
        """W_i = Σ_{j ≤ i} (E[D_j² | 𝒢_{j−1}] + D_j²), with W_0 = 0."""
        if self.predictable_variance is None:
            raise InputError("path carries no predictable variances")
        steps = self.predictable_variance + self.increments**2
        zero = np.zeros(steps.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(steps, axis=-1)], axis=-1)


PathGenerator = Callable[[np.random.Generator, int], MartingalePath]


def _from_increments(increments: NDArray[np.float64], variances: NDArray[np.float64]) -> MartingalePath:
    zero = np.zeros(increments.shape[:-1] + (1,))
    return MartingalePath(np.concatenate([zero, np.cumsum(increments, axis=-1)], axis=-1), variances)


def gaussian_walk(n: int, scale: float = 1.0) -> PathGenerator:
    def generate(rng: np.random.Generator, paths: int) -> MartingalePath:
        d = scale * rng.standard_normal((paths, n))
        return _from_increments(d, np.full((paths, n), scale * scale))

    return generate


def rademacher_walk(n: int) -> PathGenerator:
    def generate(rng: np.random.Generator, paths: int) -> MartingalePath:
        d = 1.0 - 2.0 * rng.integers(0, 2, size=(paths, n))
        return _from_increments(d, np.ones((paths, n)))

    return generate


def zero_walk(n: int) -> PathGenerator:
    def generate(rng: np.random.Generator, paths: int) -> MartingalePath:
        return _from_increments(np.zeros((paths, n)), np.zeros((paths, n)))

    return generate


def volatility_walk(n: int, base: float = 1.0, swing: float = 0.5) -> PathGenerator:
    """Gaussian increments whose scale base + swing·|tanh N_{i−1}| depends on the past."""

    def generate(rng: np.random.Generator, paths: int) -> MartingalePath:
        g = rng.standard_normal((paths, n))
        values = np.zeros((paths, n + 1))
        variances = np.empty((paths, n))
        for i in range(n):
            scale = base + swing * np.abs(np.tanh(values[:, i]))
            variances[:, i] = scale**2
            values[:, i + 1] = values[:, i] + scale * g[:, i]
        return MartingalePath(values, variances)

    return generate


WALKS: dict[str, Callable[..., PathGenerator]] = {
    "gaussian": gaussian_walk,
    "rademacher": rademacher_walk,
    "zero": zero_walk,
    "volatility": volatility_walk,
}


# ----------------------------------------------------------------------
# Verifiers
# ----------------------------------------------------------------------


def _frequency_report(name: str, events: NDArray[np.bool_], bound: float, details: dict) -> CheckReport:
    trials = events.shape[0]
    frequency = float(events.mean()) if trials else 0.0
    return CheckReport(
        name=name,
        estimate=frequency,
        bound=bound,
        standard_error=binomial_se(bound, trials),
        passed=frequency_passes(frequency, bound, trials),
        details={**details, "trials": trials, "events": int(events.sum())},
    )


def nonneg_lowertail_check(
    law: ScalarLaw, n: int, t: float, trials: int, seed: int, workers: int = 1
) -> CheckReport:
    """P(Σ(W_i − EW_i) ≤ −√(2t Σ E W_i²)) against e^{−t} for non-negative W."""
    if not law.is_nonnegative:
        raise InputError(f"law {law} has negative support")
    if t < 0 or n < 1 or trials < 1:
        raise InputError("need t ≥ 0, n ≥ 1 and trials ≥ 1")
    mean, second = law.mean, law.second_moment
    threshold = math.sqrt(2.0 * t * n * second)

    def block(size: int, rng: np.random.Generator) -> NDArray[np.bool_]:
        w = law.sample(rng, (size, n))
        return np.sum(w - mean, axis=1) <= -threshold

    events = run_blocks(block, trials, seed, workers)
    return _frequency_report(
        f"nonneg_lowertail({law}, n={n}, t={t:g})",
        events,
        math.exp(-t),
        {"threshold": -threshold, "n": n, "t": t},
    )


def supermartingale_tail_check(
    generator: PathGenerator, xi: float, t: float, trials: int, seed: int, workers: int = 1
) -> CheckReport:
    """P(∃i: N_i > (ξ/2)·W_i + t/ξ) against e^{−t}."""
    if xi <= 0 or t < 0:
        raise InputError("need ξ > 0 and t ≥ 0")

    def block(size: int, rng: np.random.Generator) -> NDArray[np.bool_]:
        path = generator(rng, size)
        w = path.quadratic_variation()
        return np.any(path.values > 0.5 * xi * w + t / xi, axis=-1)

    events = run_blocks(block, trials, seed, workers)
    return _frequency_report(
        f"supermartingale(ξ={xi:g}, t={t:g})", events, math.exp(-t), {"xi": xi, "t": t}
    )


def bdg_moment_check(
    law: ScalarLaw, q: float, n: int, trials: int, seed: int, workers: int = 1
) -> CheckReport:
    """(E|n⁻¹ΣW_i − EW|^q)^{1/q} against (2q/√n)(E|W|^q)^{1/q}."""
    if q < 2 or n < 1 or trials < 2:
        raise InputError("need q ≥ 2, n ≥ 1 and trials ≥ 2")
    moment = law.abs_moment(q)
    if not math.isfinite(moment):
        raise InvalidMomentsError(f"law {law} has no finite {q:g}-th moment")
    mean = law.mean
    rhs = 2.0 * q / math.sqrt(n) * moment ** (1.0 / q)

    def block(size: int, rng: np.random.Generator) -> NDArray[np.float64]:
        w = law.sample(rng, (size, n))
        return np.abs(w.mean(axis=1) - mean) ** q

    dev = run_blocks(block, trials, seed, workers)
    m = float(dev.mean())
    lhs = m ** (1.0 / q)
    se_m = float(dev.std(ddof=1) / math.sqrt(trials))
    se = se_m / (q * m ** ((q - 1) / q)) if m > 0 else 0.0
    passed = lhs <= rhs + get_settings().PASS_SE * se

    return CheckReport(
        name=f"bdg({law}, q={q:g}, n={n})",
        estimate=lhs,
        bound=rhs,
        standard_error=se,
        passed=bool(passed),
        details={"q": q, "n": n, "trials": trials, "ratio": lhs / rhs if rhs > 0 else 0.0},
    )
