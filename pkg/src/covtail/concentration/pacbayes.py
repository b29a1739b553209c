"""Gaussian smoothing, relative entropy and the variational principle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp, rel_entr

from covtail.ensembles import make_rng
from covtail.errors import InputError, SingularMatrixError
from covtail.linalg import SymMatrix, as_sym, is_psd, op_norm_and_min_eig, psd_sqrt
from covtail.settings import get_settings

PROBABILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """Γ_{v,C}: the normal law with mean v and covariance C."""

    mean: NDArray[np.float64]
    covariance: SymMatrix

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = as_sym(self.covariance)
        if mean.shape[0] != cov.dim:
            raise InputError(f"mean has length {mean.shape[0]}, covariance has dim {cov.dim}")
        if not np.all(np.isfinite(mean)):
            raise InputError("mean must be finite")
        if not is_psd(cov):
            raise InputError("covariance must be PSD")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.covariance.dim

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        root = np.asarray(psd_sqrt(self.covariance))
        return self.mean + rng.standard_normal((size, self.dim)) @ root


def gaussian_smooth_quadratic(b: SymMatrix | ArrayLike, mu: GaussianMeasure) -> float:
    """∫⟨θ, Bθ⟩ dΓ_{v,C}(θ) = vᵀBv + tr(BC)."""
    b = as_sym(b)
    if b.dim != mu.dim:
        raise InputError(f"B has dim {b.dim}, measure has dim {mu.dim}")
    bm = np.asarray(b)
    return float(mu.mean @ bm @ mu.mean + np.sum(bm * np.asarray(mu.covariance)))


def smooth_quadratic_monte_carlo(
    b: SymMatrix | ArrayLike, mu: GaussianMeasure, draws: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of the smoothed quadratic form and its standard error."""
    b = as_sym(b)
    if b.dim != mu.dim:
        raise InputError(f"B has dim {b.dim}, measure has dim {mu.dim}")
    theta = mu.sample(make_rng(seed), draws)
    values = np.einsum("ij,jk,ik->i", theta, np.asarray(b), theta)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(draws))


def gaussian_kl(mean_shift: ArrayLike, c: SymMatrix | ArrayLike) -> float:
    """KL(Γ_{v,C} | Γ_{0,C}) = vᵀC⁻¹v / 2."""
    c = as_sym(c)
    v = np.asarray(mean_shift, dtype=np.float64).reshape(-1)
    if v.shape[0] != c.dim:
        raise InputError(f"mean shift has length {v.shape[0]}, C has dim {c.dim}")
    lam_max, lam_min = op_norm_and_min_eig(c)
    if lam_min <= get_settings().RANK_TOL * max(lam_max, 0.0) or lam_max <= 0:
        raise SingularMatrixError(f"C is singular (λ_min={lam_min:.3e}, λ_max={lam_max:.3e})")
    return max(float(v @ np.linalg.solve(np.asarray(c), v)) / 2.0, 0.0)


def _probability_vector(x: ArrayLike, name: str) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InputError(f"{name} has negative or non-finite entries")
    if abs(x.sum() - 1.0) > PROBABILITY_TOL:
        raise InputError(f"{name} sums to {x.sum():.15g}, not 1")
    return x


def discrete_kl(mu1: ArrayLike, mu0: ArrayLike) -> float:
    """Σ μ₁ ln(μ₁/μ₀) with 0·ln(0/q) = 0 and p·ln(p/0) = +∞."""
    p = _probability_vector(mu1, "mu1")
    q = _probability_vector(mu0, "mu0")
    if p.shape != q.shape:
        raise InputError("mu1 and mu0 have different supports")
    return float(np.sum(rel_entr(p, q)))


def variational_check(
    h_values: ArrayLike, mu0: ArrayLike, mu1: ArrayLike
) -> tuple[float, float, bool]:
    """E_{μ₁} h ≤ ln E_{μ₀} e^h + KL(μ₁|μ₀); returns (lhs, rhs, holds)."""
    h = np.asarray(h_values, dtype=np.float64).reshape(-1)
    p0 = _probability_vector(mu0, "mu0")
    p1 = _probability_vector(mu1, "mu1")
    if not (h.shape == p0.shape == p1.shape):
        raise InputError("h_values, mu0 and mu1 must share one support")

    lhs = float(np.sum(h[p1 > 0] * p1[p1 > 0]))
    kl = discrete_kl(p1, p0)
    rhs = math.inf if math.isinf(kl) else float(logsumexp(h, b=p0)) + kl
    return lhs, rhs, lhs <= rhs + PROBABILITY_TOL
