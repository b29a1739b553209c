"""Normalized designs and exact minorization over sparse supports."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.errors import CombinatorialBudgetError, InputError, NotPSDError
from covtail.linalg import SymMatrix, as_sym, is_psd, range_basis
from covtail.settings import get_settings

logger = logging.getLogger(__name__)


def inverse_sqrt_diagonal(diagonal: ArrayLike) -> NDArray[np.float64]:
    """Entries d^{-1/2}, with 0 wherever d = 0."""
    d = np.asarray(diagonal, dtype=np.float64)
    if np.any(d < 0):
        raise InputError("diagonal entries must be ≥ 0")
    return np.divide(1.0, np.sqrt(d), out=np.zeros_like(d), where=d > 0)


def normalize_design(sigma_hat: SymMatrix | ArrayLike) -> SymMatrix:
    """D^{-1/2} Σ̂ D^{-1/2} with D = diag(Σ̂); the diagonal is exactly 1 or 0."""
    sigma_hat = as_sym(sigma_hat)
    if not is_psd(sigma_hat):
        raise NotPSDError("cannot normalize a matrix that is not PSD")
    diagonal = sigma_hat.diag()
    scale = inverse_sqrt_diagonal(diagonal)
    x = np.asarray(sigma_hat) * np.outer(scale, scale)
    np.fill_diagonal(x, np.where(diagonal > 0, 1.0, 0.0))
    return SymMatrix(x)


@dataclass(frozen=True, eq=False)
class NormalizedDesign:
    x_hat: SymMatrix
    x_pop: SymMatrix
    diag_hat: NDArray[np.float64]
    diag_pop: NDArray[np.float64]

    @classmethod
    def build(cls, sigma_hat: SymMatrix | ArrayLike, sigma: SymMatrix | ArrayLike) -> NormalizedDesign:
        sigma_hat, sigma = as_sym(sigma_hat), as_sym(sigma)
        if sigma_hat.dim != sigma.dim:
            raise InputError(f"dimension mismatch: {sigma_hat.dim} vs {sigma.dim}")
        return cls(normalize_design(sigma_hat), normalize_design(sigma), sigma_hat.diag(), sigma.diag())


# ----------------------------------------------------------------------
# Sparse supports
# ----------------------------------------------------------------------


def support_count(p: int, d: int) -> int:
    return math.comb(p, min(d, p))


def iter_supports(
    p: int, d: int, rng: np.random.Generator | None = None, budget: int | None = None
) -> tuple[Iterator[tuple[int, ...]], bool]:
    """All size-d supports when C(p, d) fits the budget, else ``budget`` random ones.

    Returns the iterator and whether it is exhaustive. Without an rng an
    oversized enumeration raises CombinatorialBudgetError.
    """
    if d < 1:
        raise InputError(f"support size must be ≥ 1, got {d}")
    budget = get_settings().COMBINATORIAL_BUDGET if budget is None else budget
    d = min(d, p)
    if math.comb(p, d) <= budget:
        return itertools.combinations(range(p), d), True
    if rng is None:
        raise CombinatorialBudgetError(f"C({p}, {d}) = {math.comb(p, d)} supports exceed the budget of {budget}")
    logger.warning("C(%d, %d) supports exceed the budget; checking %d sampled supports", p, d, budget)
    sampled = (tuple(sorted(rng.choice(p, size=d, replace=False).tolist())) for _ in range(budget))
    return sampled, False


@dataclass(frozen=True)
class SparseMinimum:
    value: float
    support: tuple[int, ...]
    exhaustive: bool


def sparse_min_eigenvalue(
    m: SymMatrix | ArrayLike, d: int, rng: np.random.Generator | None = None, budget: int | None = None
) -> SparseMinimum:
    """min over |U| = d of λ_min(M_UU), the least value of vᵀMv on unit d-sparse v."""
    m = np.asarray(as_sym(m))
    supports, exhaustive = iter_supports(m.shape[0], d, rng, budget)
    best, argmin = math.inf, ()
    for u in supports:
        value = float(np.linalg.eigvalsh(m[np.ix_(u, u)])[0])
        if value < best:
            best, argmin = value, u
    return SparseMinimum(best, argmin, exhaustive)


def sparse_lower_ratio(
    sigma_hat: SymMatrix | ArrayLike,
    sigma: SymMatrix | ArrayLike,
    d: int,
    rng: np.random.Generator | None = None,
    budget: int | None = None,
) -> SparseMinimum:
    """Largest c with vᵀΣ̂v ≥ c·vᵀΣv for every d-sparse v.

    Per support this is the least eigenvalue of Σ̂_UU whitened by Σ_UU on
    the range of Σ_UU; supports where Σ_UU vanishes impose nothing.
    """
    sigma_hat, sigma = np.asarray(as_sym(sigma_hat)), np.asarray(as_sym(sigma))
    if sigma_hat.shape != sigma.shape:
        raise InputError(f"dimension mismatch: {sigma_hat.shape} vs {sigma.shape}")
    supports, exhaustive = iter_supports(sigma.shape[0], d, rng, budget)
    best, argmin = math.inf, ()
    for u in supports:
        values, basis = range_basis(sigma[np.ix_(u, u)])
        if values.size == 0:
            continue
        transform = basis / np.sqrt(values)
        value = float(np.linalg.eigvalsh(transform.T @ sigma_hat[np.ix_(u, u)] @ transform)[0])
        if value < best:
            best, argmin = value, u
    return SparseMinimum(best, argmin, exhaustive)
