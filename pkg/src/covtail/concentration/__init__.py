from covtail.concentration.pacbayes import (
    GaussianMeasure,
    discrete_kl,
    gaussian_kl,
    gaussian_smooth_quadratic,
    smooth_quadratic_monte_carlo,
    variational_check,
)
from covtail.concentration.suites import concentration_suite, identity_suite
from covtail.concentration.verifiers import (
    WALKS,
    MartingalePath,
    bdg_moment_check,
    gaussian_walk,
    nonneg_lowertail_check,
    rademacher_walk,
    supermartingale_tail_check,
    volatility_walk,
    zero_walk,
)

__all__ = [
    "WALKS",
    "GaussianMeasure",
    "MartingalePath",
    "bdg_moment_check",
    "concentration_suite",
    "discrete_kl",
    "gaussian_kl",
    "gaussian_smooth_quadratic",
    "gaussian_walk",
    "identity_suite",
    "nonneg_lowertail_check",
    "rademacher_walk",
    "smooth_quadratic_monte_carlo",
    "supermartingale_tail_check",
    "variational_check",
    "volatility_walk",
    "zero_walk",
]
