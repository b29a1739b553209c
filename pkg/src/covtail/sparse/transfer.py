"""Transfer from sparse minorization to a global one, and its restricted-eigenvalue corollary.

If vᵀΣ̂v ≥ (1−η)vᵀΣv for every d-sparse v and D is diagonal with
D[j,j] ≥ Σ̂[j,j] − (1−η)Σ[j,j], then for every x

    xᵀΣ̂x ≥ (1−η)xᵀΣx − |D^{1/2}x|₁² / (d−1).

The premise is checked exactly by enumerating principal submatrices of
Σ̂ − (1−η)Σ; the conclusion is probed on random vectors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles import make_rng
from covtail.errors import InputError, PreconditionError
from covtail.linalg import SymMatrix, as_sym, op_norm
from covtail.reporting import CheckReport
from covtail.sparse.cone import ConeSpec, cone_probes
from covtail.sparse.design import sparse_min_eigenvalue
from covtail.sparse.restricted import restricted_eigenvalue

logger = logging.getLogger(__name__)

PREMISE_TOL = 1e-10
MAX_WITNESSES = 10


@dataclass
class TransferReport:
    premise_holds: bool
    premise_exhaustive: bool
    premise_min_eigenvalue: float
    probes: int
    violations: int
    min_margin: float
    witnesses: list[list[float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """The implication holds on every probe (vacuously when the premise fails)."""
        return not self.premise_holds or self.violations == 0

    def to_check(self, name: str = "transfer") -> CheckReport:
        return CheckReport(
            name=name,
            estimate=self.min_margin,
            bound=0.0,
            standard_error=0.0,
            passed=self.passed,
            details={
                "premise_holds": self.premise_holds,
                "premise_exhaustive": self.premise_exhaustive,
                "premise_min_eigenvalue": self.premise_min_eigenvalue,
                "probes": self.probes,
                "violations": self.violations,
                "witnesses": self.witnesses,
            },
        )


def _probe_vectors(p: int, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Gaussian, random-sparse and cone-structured rows in equal shares."""
    third = count // 3
    gaussian = rng.standard_normal((count - 2 * third, p))
    sparse = rng.standard_normal((third, p)) * (rng.random((third, p)) < rng.random((third, 1)))
    cones = []
    for _ in range(third):
        size = int(rng.integers(1, max(p // 2, 1) + 1))
        cone = ConeSpec(tuple(rng.choice(p, size=size, replace=False).tolist()), float(rng.uniform(0.5, 5.0)))
        cones.append(cone_probes(cone, p, 1, rng)[0])
    parts = [gaussian, sparse] + ([np.vstack(cones)] if cones else [])
    return np.vstack(parts)


def transfer_check(
    sigma_hat: SymMatrix | ArrayLike,
    sigma: SymMatrix | ArrayLike,
    eta: float,
    d: int,
    diagonal: ArrayLike,
    probes: int = 10_000,
    seed: int = 0,
) -> TransferReport:
    sigma_hat, sigma = as_sym(sigma_hat), as_sym(sigma)
    p = sigma.dim
    if sigma_hat.dim != p:
        raise InputError(f"dimension mismatch: {sigma_hat.dim} vs {p}")
    if not 0.0 <= eta < 1.0:
        raise InputError(f"eta must lie in [0, 1), got {eta}")
    if d < 2:
        raise InputError(f"d must be ≥ 2, got {d}")
    dvec = np.asarray(diagonal, dtype=np.float64).reshape(-1)
    if dvec.shape != (p,):
        raise InputError(f"D must have {p} diagonal entries, got {dvec.shape}")
    scale = max(op_norm(sigma_hat), op_norm(sigma), 1e-300)
    needed = sigma_hat.diag() - (1.0 - eta) * sigma.diag()
    if np.any(dvec < 0) or np.any(dvec < needed - PREMISE_TOL * scale):
        raise PreconditionError("D must be non-negative with D[j,j] ≥ Σ̂[j,j] − (1−η)Σ[j,j]")

    rng = make_rng(seed)
    gap = SymMatrix(np.asarray(sigma_hat) - (1.0 - eta) * np.asarray(sigma))
    premise = sparse_min_eigenvalue(gap, d, rng)
    premise_holds = premise.value >= -PREMISE_TOL * scale
    if not premise.exhaustive:
        logger.warning("transfer premise checked on sampled supports only")

    x = _probe_vectors(p, probes, rng)
    lhs = np.einsum("ij,jk,ik->i", x, np.asarray(sigma_hat), x)
    rhs = (1.0 - eta) * np.einsum("ij,jk,ik->i", x, np.asarray(sigma), x)
    correction = (np.abs(x) @ np.sqrt(dvec)) ** 2 / (d - 1)
    margin = lhs - rhs + correction
    norms = np.einsum("ij,ij->i", x, x)
    bad = margin < -PREMISE_TOL * scale * np.maximum(norms, 1.0)
    if premise_holds and np.any(bad):
        logger.warning("transfer conclusion violated on %d of %d probes", int(bad.sum()), probes)

    relative = np.divide(margin, scale * norms, out=np.zeros_like(margin), where=norms > 0)
    return TransferReport(
        premise_holds=premise_holds,
        premise_exhaustive=premise.exhaustive,
        premise_min_eigenvalue=premise.value,
        probes=int(x.shape[0]),
        violations=int(bad.sum()) if premise_holds else 0,
        min_margin=float(relative.min()) if relative.size else 0.0,
        witnesses=[row.tolist() for row in x[bad][:MAX_WITNESSES]],
    )


def random_transfer_instance(
    rng: np.random.Generator, p: int, d: int, eta: float
) -> tuple[SymMatrix, SymMatrix, NDArray[np.float64]]:
    """(Σ̂, Σ, D) whose premise holds on d-sparse vectors but usually not globally.

    Σ̂ − (1−η)Σ = Q(cI − (b/p)𝟙𝟙ᵀ)Q + PSD with random signs Q and c = bd/p, which
    is PSD on every d-sparse support and indefinite along Q𝟙 when d < p.
    """
    m = rng.standard_normal((p, p))
    sigma = m @ m.T / p + 0.1 * np.eye(p)
    b = float(rng.uniform(0.1, 1.0))
    signs = rng.choice([-1.0, 1.0], size=p)
    core = (b * d / p) * np.eye(p) - (b / p) * np.outer(signs, signs)
    extra = rng.standard_normal((p, 2))
    sigma_hat = (1.0 - eta) * sigma + core + 0.05 * extra @ extra.T
    diagonal = np.maximum(np.diag(sigma_hat) - (1.0 - eta) * np.diag(sigma), 0.0)
    return SymMatrix(sigma_hat), SymMatrix(sigma), diagonal


# ----------------------------------------------------------------------
# Restricted-eigenvalue inheritance
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RudelsonSparsity:
    d: int
    literal_d: int


def rudelson_sparsity(s: int, alpha: float, epsilon: float, gamma: float, max_diagonal: float, re_value: float) -> RudelsonSparsity:
    """d = ⌈1 + 8(γ+ε)s(1+α)²·max_j Σ[j,j] / (ε·re²)⌉.

    The stated formula also carries a trailing ·re factor; that value is
    reported as ``literal_d``.
    """
    if re_value <= 0:
        raise PreconditionError("re(Σ, S, α) must be > 0")
    base = 8.0 * (gamma + epsilon) * s * (1.0 + alpha) ** 2 * max_diagonal / (epsilon * re_value**2)
    d = math.ceil(1.0 + base)
    literal = math.ceil(1.0 + base * re_value)
    logger.debug("Rudelson sparsity: d=%d (trailing-re reading %d)", d, literal)
    return RudelsonSparsity(d=d, literal_d=literal)


@dataclass
class RudelsonReport:
    precondition_met: bool
    d: int
    literal_d: int
    re_sigma: float
    re_sigma_hat: float | None = None
    min_margin: float | None = None
    quadratic_ok: bool | None = None
    re_ok: bool | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.precondition_met or bool(self.quadratic_ok and self.re_ok)

    def to_check(self, name: str = "rudelson") -> CheckReport:
        return CheckReport(
            name=name,
            estimate=self.re_sigma_hat if self.re_sigma_hat is not None else float("nan"),
            bound=self.re_sigma,
            standard_error=0.0,
            passed=self.passed,
            details={
                "precondition_met": self.precondition_met,
                "d": self.d,
                "literal_d": self.literal_d,
                "min_margin": self.min_margin,
                "quadratic_ok": self.quadratic_ok,
                "re_ok": self.re_ok,
                **self.details,
            },
        )


def rudelson_check(
    sigma_hat: SymMatrix | ArrayLike,
    sigma: SymMatrix | ArrayLike,
    cone: ConeSpec,
    epsilon: float,
    gamma: float,
    probes: int = 2000,
    seed: int = 0,
    restarts: int | None = None,
) -> RudelsonReport:
    """Check xᵀΣ̂x ≥ (1−3ε/2)xᵀΣx on 𝒞(S, α) and re(Σ̂) ≥ (1−ε)re(Σ) under the sparse hypotheses."""
    sigma_hat, sigma = as_sym(sigma_hat), as_sym(sigma)
    if not 0.0 < epsilon < 0.5:
        raise InputError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if gamma <= 0:
        raise InputError(f"gamma must be > 0, got {gamma}")
    p = sigma.dim
    cone.split(p)
    scale = max(op_norm(sigma_hat), op_norm(sigma), 1e-300)

    re_sigma = restricted_eigenvalue(sigma, cone, restarts, seed).value
    if re_sigma <= 0:
        return RudelsonReport(False, 0, 0, re_sigma, details={"reason": "re(Σ, S, α) = 0"})
    sparsity = rudelson_sparsity(cone.s, cone.alpha, epsilon, gamma, float(sigma.diag().max()), re_sigma)
    rng = make_rng(seed)

    gap = SymMatrix(np.asarray(sigma_hat) - (1.0 - epsilon) * np.asarray(sigma))
    sparse = sparse_min_eigenvalue(gap, min(sparsity.d, p), rng)
    diagonal_ok = bool(np.all(sigma_hat.diag() <= (1.0 + gamma) * sigma.diag() + PREMISE_TOL * scale))
    hypotheses = sparse.value >= -PREMISE_TOL * scale and diagonal_ok
    global_min = float(np.linalg.eigvalsh(np.asarray(gap))[0])
    details = {
        "sparse_min_eigenvalue": sparse.value,
        "sparse_exhaustive": sparse.exhaustive,
        "diagonal_ok": diagonal_ok,
        "global_min_eigenvalue": global_min,
        "global_order_holds": global_min >= -PREMISE_TOL * scale,
    }
    if not hypotheses:
        return RudelsonReport(False, sparsity.d, sparsity.literal_d, re_sigma, details=details)

    x = cone_probes(cone, p, probes, rng)
    lhs = np.einsum("ij,jk,ik->i", x, np.asarray(sigma_hat), x)
    rhs = (1.0 - 1.5 * epsilon) * np.einsum("ij,jk,ik->i", x, np.asarray(sigma), x)
    norms = np.einsum("ij,ij->i", x, x)
    margin = (lhs - rhs) / (scale * np.maximum(norms, 1e-300))
    re_hat = restricted_eigenvalue(sigma_hat, cone, restarts, seed).value

    return RudelsonReport(
        precondition_met=True,
        d=sparsity.d,
        literal_d=sparsity.literal_d,
        re_sigma=re_sigma,
        re_sigma_hat=re_hat,
        min_margin=float(margin.min()),
        quadratic_ok=bool(np.all(margin >= -PREMISE_TOL)),
        re_ok=re_hat >= (1.0 - epsilon) * re_sigma - 1e-8 * math.sqrt(scale),
        details=details,
    )


def random_rudelson_sigma(rng: np.random.Generator, p: int) -> SymMatrix:
    """Σ = I + 0.05·MMᵀ/p, close enough to I that re(Σ, S, α) stays near 1."""
    m = rng.standard_normal((p, p))
    return SymMatrix(np.eye(p) + 0.05 * m @ m.T / p)


def random_rudelson_instance(
    rng: np.random.Generator, sigma: SymMatrix | ArrayLike, epsilon: float, gamma: float, d: int
) -> SymMatrix:
    """Σ̂ with Σ̂[j,j] ≤ (1+γ)Σ[j,j] and vᵀΣ̂v ≥ (1−ε)vᵀΣv on every d-sparse v.

    Σ̂ − (1−ε)Σ = Q(cI − (b/p)𝟙𝟙ᵀ)Q with random signs Q and c = bd/p. Its
    least eigenvalue on a support of size k is b(d−k)/p, so the order holds
    on d-sparse vectors and fails along Q𝟙 whenever d < p.
    """
    sigma = as_sym(sigma)
    p = sigma.dim
    d = min(d, p)
    if d < 2:
        raise InputError(f"sparsity level must be ≥ 2, got {d}")
    # diag(Σ̂) − (1−ε)diag(Σ) = b(d−1)/p ≤ (ε+γ)·min_j Σ[j,j]
    b = float(rng.uniform(0.2, 1.0)) * (epsilon + gamma) * float(sigma.diag().min()) * p / (d - 1)
    signs = rng.choice([-1.0, 1.0], size=p)
    core = (b * d / p) * np.eye(p) - (b / p) * np.outer(signs, signs)
    return SymMatrix((1.0 - epsilon) * np.asarray(sigma) + core)
