"""Pre-registered check suites run by ``covtail verify``."""

from __future__ import annotations

import logging
import math

import numpy as np

from covtail.concentration.pacbayes import (
    GaussianMeasure,
    gaussian_kl,
    gaussian_smooth_quadratic,
    smooth_quadratic_monte_carlo,
    variational_check,
)
from covtail.concentration.verifiers import (
    bdg_moment_check,
    gaussian_walk,
    nonneg_lowertail_check,
    supermartingale_tail_check,
)
from covtail.ensembles import ScalarLaw, gaussian, make_rng
from covtail.linalg import SymMatrix
from covtail.moments import outer_product_traces, powertrace_check
from covtail.reporting import CheckReport
from covtail.settings import get_settings

logger = logging.getLogger(__name__)


def _exact(name: str, value: float, expected: float, tol: float = 1e-10) -> CheckReport:
    gap = abs(value - expected)
    return CheckReport(
        name=name,
        estimate=value,
        bound=expected,
        standard_error=0.0,
        passed=gap <= tol * max(1.0, abs(expected)),
        details={"gap": gap, "tolerance": tol},
    )


def _random_psd(rng: np.random.Generator, p: int) -> SymMatrix:
    m = rng.standard_normal((p, p))
    return SymMatrix(m @ m.T / p)


def identity_suite(seed: int = 0, draws: int = 1_000_000, instances: int = 1000) -> list[CheckReport]:
    """Closed-form smoothing and KL values, a Monte Carlo integral and a variational search."""
    rng = make_rng(seed)
    checks: list[CheckReport] = []

    p = 4
    identity = GaussianMeasure(np.zeros(p), SymMatrix.identity(p).scaled(1.0 / p))
    checks.append(_exact("smooth(I, 0, I/p)", gaussian_smooth_quadratic(SymMatrix.identity(p), identity), 1.0))

    b = SymMatrix(rng.standard_normal((p, p)))
    v = rng.standard_normal(p)
    point = GaussianMeasure(v, SymMatrix(np.zeros((p, p))))
    checks.append(_exact("smooth(B, v, 0)", gaussian_smooth_quadratic(b, point), b.quadratic_form(v)))

    mu = GaussianMeasure(rng.standard_normal(p), _random_psd(rng, p))
    exact = gaussian_smooth_quadratic(b, mu)
    estimate, se = smooth_quadratic_monte_carlo(b, mu, draws, int(rng.integers(0, 2**63)))
    checks.append(
        CheckReport(
            name="smooth Monte Carlo",
            estimate=estimate,
            bound=exact,
            standard_error=se,
            passed=abs(estimate - exact) <= get_settings().PASS_SE * se,
            details={"draws": draws},
        )
    )

    b2 = SymMatrix(rng.standard_normal((p, p)))
    checks.append(
        _exact(
            "smooth linear in B",
            gaussian_smooth_quadratic(b + b2, mu),
            gaussian_smooth_quadratic(b, mu) + gaussian_smooth_quadratic(b2, mu),
            tol=1e-12,
        )
    )

    e1 = np.eye(p)[0]
    checks.append(_exact("kl(v=0, C=I)", gaussian_kl(np.zeros(p), SymMatrix.identity(p)), 0.0))
    checks.append(_exact("kl(e1, I)", gaussian_kl(e1, SymMatrix.identity(p)), 0.5))
    checks.append(_exact("kl(e1, I/4)", gaussian_kl(e1, SymMatrix.identity(p).scaled(0.25)), 2.0))

    failures = 0
    worst = math.inf
    for _ in range(instances):
        h = rng.uniform(-5.0, 5.0, 10)
        mu0 = rng.dirichlet(np.ones(10))
        mu1 = rng.dirichlet(np.ones(10))
        lhs, rhs, holds = variational_check(h, mu0, mu1)
        failures += not holds
        worst = min(worst, rhs - lhs)
    checks.append(
        CheckReport(
            name="variational principle (random instances)",
            estimate=float(failures),
            bound=0.0,
            standard_error=0.0,
            passed=failures == 0,
            details={"instances": instances, "smallest_margin": worst},
        )
    )

    uniform = np.full(10, 0.1)
    lhs, rhs, _ = variational_check(np.full(10, 1.5), uniform, uniform)
    checks.append(_exact("variational equality at constant h", rhs - lhs, 0.0, tol=1e-12))

    for check in checks:
        logger.debug("%s: estimate=%.6g bound=%.6g passed=%s", check.name, check.estimate, check.bound, check.passed)
    return checks


def concentration_suite(seed: int = 0, trials: int = 100_000, workers: int = 1) -> list[CheckReport]:
    """Lower-tail, supermartingale, BDG and power-trace verifiers at their reference settings."""
    rng = make_rng(seed)

    def sub_seed() -> int:
        return int(rng.integers(0, 2**63))

    checks = [
        nonneg_lowertail_check(ScalarLaw.exponential(1.0), n=100, t=2.0, trials=trials, seed=sub_seed(), workers=workers),
        supermartingale_tail_check(gaussian_walk(50), xi=0.5, t=2.0, trials=trials, seed=sub_seed(), workers=workers),
        bdg_moment_check(ScalarLaw.rademacher(), q=2.0, n=100, trials=trials, seed=sub_seed(), workers=workers),
        bdg_moment_check(ScalarLaw.exponential(1.0), q=3.0, n=100, trials=trials, seed=sub_seed(), workers=workers),
        powertrace_check(
            outer_product_traces(gaussian(SymMatrix.identity(3))),
            q=2.0,
            h=math.sqrt(3.0),
            trials=trials,
            seed=sub_seed(),
        ),
    ]
    return checks
