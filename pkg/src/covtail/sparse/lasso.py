"""LASSO by cyclic coordinate descent on the Gram form.

Minimises (1/n)|Xβ − Y|² + λ|β|₁. Each sweep updates every coordinate by soft
thresholding against G = XᵀX/n and q = XᵀY/n, keeping Gβ current, and
convergence is declared on the KKT residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles import SampleBatch
from covtail.errors import DivergedError, InputError
from covtail.settings import get_settings

logger = logging.getLogger(__name__)


def soft_threshold(x: NDArray[np.float64] | float, t: float) -> NDArray[np.float64] | float:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass(frozen=True, eq=False)
class LassoResult:
    beta: NDArray[np.float64]
    objective_history: NDArray[np.float64]
    kkt_gap: float
    sweeps: int


def kkt_gap(gram: NDArray[np.float64], xty: NDArray[np.float64], beta: NDArray[np.float64], lam: float) -> float:
    """Largest violation of 0 ∈ ∇ + λ∂|β|₁ with ∇ = 2(Gβ − q)."""
    grad = 2.0 * (gram @ beta - xty)
    active = beta != 0
    residual = np.where(active, np.abs(grad + lam * np.sign(beta)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(residual.max()) if residual.size else 0.0


def lasso_coordinate_descent(
    x: ArrayLike,
    y: ArrayLike,
    lam: float,
    tol: float | None = None,
    max_iters: int | None = None,
    beta0: ArrayLike | None = None,
) -> LassoResult:
    settings = get_settings()
    tol = settings.LASSO_TOL if tol is None else tol
    max_iters = settings.LASSO_MAX_ITERS if max_iters is None else max_iters
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InputError(f"design of shape {x.shape} does not match {y.shape[0]} responses")
    if not (math.isfinite(lam) and lam >= 0):
        raise InputError(f"lambda must be ≥ 0, got {lam}")
    n, p = x.shape

    gram = x.T @ x / n
    xty = x.T @ y / n
    yy = float(y @ y) / n
    diag = np.diag(gram).copy()
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=np.float64).copy()
    g_beta = gram @ beta

    def objective() -> float:
        return float(beta @ g_beta - 2.0 * xty @ beta + yy + lam * np.abs(beta).sum())

    history = [objective()]
    gap = kkt_gap(gram, xty, beta, lam)
    sweeps = 0
    while gap > tol and sweeps < max_iters:
        for j in range(p):
            if diag[j] <= 0.0:
                new = 0.0
            else:
                rho = xty[j] - g_beta[j] + diag[j] * beta[j]
                new = float(soft_threshold(rho, lam / 2.0)) / diag[j]
            delta = new - beta[j]
            if delta != 0.0:
                g_beta += gram[:, j] * delta
                beta[j] = new
        sweeps += 1
        history.append(objective())
        gap = kkt_gap(gram, xty, beta, lam)

    if gap > tol:
        raise DivergedError(
            f"LASSO did not reach KKT tolerance {tol:g} in {max_iters} sweeps",
            {"kkt_gap": gap, "sweeps": sweeps, "lambda": lam},
        )
    logger.debug("LASSO converged in %d sweeps (KKT gap %.3g)", sweeps, gap)
    return LassoResult(beta, np.asarray(history), gap, sweeps)


def lasso_fit(batch: SampleBatch, lam: float, tol: float | None = None, max_iters: int | None = None) -> NDArray[np.float64]:
    if batch.responses is None:
        raise InputError("lasso_fit needs a batch with responses")
    return lasso_coordinate_descent(batch.vectors, batch.responses, lam, tol, max_iters).beta


def lasso_lambda(noise_sigma: float, p: int, n: int, kappa: float | None = None) -> float:
    """λ = κσ√(log p / n)."""
    kappa = get_settings().LASSO_KAPPA if kappa is None else kappa
    return kappa * noise_sigma * math.sqrt(math.log(max(p, 2)) / n)
