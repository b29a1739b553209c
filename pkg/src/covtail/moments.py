"""Moment-equivalence constants h and h*.

``h`` is the smallest constant with √E(vᵀX)⁴ ≤ h·vᵀΣv for every direction v;
``h*`` is the analogous q-th root of a 2q-th moment (for the noise vector Z of
the regression model, or the scalar mixer ξ of a mixed ensemble).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln

from covtail.ensembles import (
    AffineEnsemble,
    EnsembleSpec,
    FourwiseRademacherEnsemble,
    GaussianEnsemble,
    IndependentCoordsEnsemble,
    SampleBatch,
    ScalarLaw,
    ScalarMixedEnsemble,
    make_rng,
)
from covtail.errors import InputError, InvalidMomentsError
from covtail.linalg import SymMatrix, as_sym, op_norm_and_min_eig
from covtail.reporting import CheckReport
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

INDEPENDENT_H_FLOOR = 6.0
_JENSEN_SLACK = 1e-12


@dataclass(frozen=True)
class MomentConstants:
    h: float
    h_star: float = 1.0
    q: float = 2.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h >= 1.0):
            raise InvalidMomentsError(f"h must be ≥ 1 (Jensen), got {self.h}")
        if not (math.isfinite(self.h_star) and self.h_star >= 1.0):
            raise InvalidMomentsError(f"h_star must be ≥ 1 (Jensen), got {self.h_star}")
        if not self.q >= 2.0:
            raise InvalidMomentsError(f"moment order q must be ≥ 2, got {self.q}")


def _check_jensen(second: NDArray[np.float64], fourth: NDArray[np.float64]) -> None:
    if np.any(second < 0) or np.any(fourth < 0):
        raise InvalidMomentsError("moments must be non-negative")
    bad = fourth < second**2 * (1 - _JENSEN_SLACK)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise InvalidMomentsError(
            f"coordinate {j}: fourth moment {fourth[j]:g} < squared second moment {second[j] ** 2:g}"
        )


def h_exact_independent(second_moments: ArrayLike, fourth_moments: ArrayLike) -> float:
    """h = max(6, max_j √E X[j]⁴ / E X[j]²) for independent mean-zero coordinates."""
    second = np.asarray(second_moments, dtype=np.float64).reshape(-1)
    fourth = np.asarray(fourth_moments, dtype=np.float64).reshape(-1)
    if second.shape != fourth.shape:
        raise InputError("second and fourth moment vectors differ in length")
    _check_jensen(second, fourth)

    live = second > 0
    if not np.any(live):
        return INDEPENDENT_H_FLOOR
    ratios = np.sqrt(fourth[live]) / second[live]
    return float(max(INDEPENDENT_H_FLOOR, ratios.max()))


def _unit_directions(
    p: int, directions: int, rng: np.random.Generator, max_support: int | None
) -> NDArray[np.float64]:
    """Coordinate axes plus ``directions`` random unit vectors (rows)."""
    g = rng.standard_normal((directions, p))
    if max_support is not None and max_support < p:
        mask = np.zeros((directions, p), dtype=bool)
        for i in range(directions):
            mask[i, rng.choice(p, size=max_support, replace=False)] = True
        g = np.where(mask, g, 0.0)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    g = g[norms[:, 0] > 0] / norms[norms[:, 0] > 0]
    return np.vstack([np.eye(p), g])


def h_empirical(
    batch: SampleBatch,
    sigma: SymMatrix | ArrayLike,
    directions: int = 200,
    seed: int = 0,
    max_support: int | None = None,
) -> float:
    """Largest sampled ratio √mean((vᵀX_i)⁴) / vᵀΣv.

    A lower estimate of h: the supremum over all directions can only be
    falsified from below. ``max_support`` restricts the random directions to
    that many non-zero coordinates.
    """
    sigma = as_sym(sigma)
    if directions < 1:
        raise InputError("directions must be ≥ 1")
    if sigma.dim != batch.dim:
        raise InputError(f"sigma has dim {sigma.dim}, batch has dim {batch.dim}")
    lam_max, _ = op_norm_and_min_eig(sigma)

    v = _unit_directions(batch.dim, directions, make_rng(seed), max_support)
    quad = np.einsum("ij,jk,ik->i", v, np.asarray(sigma), v)
    keep = quad > get_settings().RANK_TOL * max(lam_max, 0.0)
    if not np.any(keep):
        raise InputError("every sampled direction is degenerate for sigma")

    proj = batch.vectors @ v[keep].T
    ratios = np.sqrt(np.mean(proj**4, axis=0)) / quad[keep]
    return float(ratios.max())


def hstar_scalar(fourth_moment: float, second_moment: float) -> float:
    """Mixer constant √E ξ⁴ / E ξ².

    The mixer condition is read as E ξ⁴ ≤ h*²(E ξ²)²; the literal
    E ξ⁴ ≤ h*² E ξ² reading is logged alongside.
    """
    if second_moment <= 0:
        raise InputError("mixer second moment must be > 0")
    _check_jensen(np.array([second_moment]), np.array([fourth_moment]))
    corrected = math.sqrt(fourth_moment) / second_moment
    literal = math.sqrt(fourth_moment / second_moment)
    logger.debug("mixer h*: squared reading %.6g, literal reading %.6g", corrected, literal)
    return corrected


def hstar_for_law(law: ScalarLaw) -> float:
    return hstar_scalar(law.fourth_moment, law.second_moment)


def gaussian_hstar(q: float) -> float:
    """(E g^{2q})^{1/q} for standard normal g: ((2q−1)!!)^{1/q}."""
    # (2q−1)!! = 2^q Γ(q + 1/2) / √π
    log_double_factorial = q * math.log(2.0) + gammaln(q + 0.5) - 0.5 * math.log(math.pi)
    return float(math.exp(log_double_factorial / q))


def gaussian_noise_hstar(q: float) -> float:
    """h* of Z = ε Σ^{-1/2} X for Gaussian design and independent Gaussian noise.

    vᵀZ is a product of two independent centred normals, so its 2q-th moment
    is ((2q−1)!!)² times the q-th power of its variance.
    """
    return gaussian_hstar(q) ** 2


def exact_h(spec: EnsembleSpec) -> float | None:
    """Closed-form moment constant for an ensemble, or None when unknown.

    Gaussian vectors give √3; independent (or four-wise independent) mean-zero
    coordinates use :func:`h_exact_independent`; a scalar mixer multiplies h
    by its h*; a linear image keeps h; a translation of a mean-zero base
    costs a factor 2√2.
    """
    if isinstance(spec, GaussianEnsemble):
        return math.sqrt(3.0)
    if isinstance(spec, FourwiseRademacherEnsemble):
        return h_exact_independent(np.ones(spec.dim), np.ones(spec.dim))
    if isinstance(spec, IndependentCoordsEnsemble):
        if any(abs(law.mean) > 0 for law in spec.laws):
            return None
        return h_exact_independent(
            [law.second_moment for law in spec.laws], [law.fourth_moment for law in spec.laws]
        )
    if isinstance(spec, ScalarMixedEnsemble):
        base = exact_h(spec.base)
        return None if base is None else base * hstar_for_law(spec.mixer)
    if isinstance(spec, AffineEnsemble):
        base = exact_h(spec.base)
        if base is None:
            return None
        if not np.any(spec.shift):
            return base
        if np.any(spec.base.mean()):
            return None
        return 2.0 * math.sqrt(2.0) * base
    return None


def exact_hstar(spec: EnsembleSpec, q: float) -> float | None:
    """2q-vs-2 constant for ensembles where it is known in closed form."""
    if isinstance(spec, GaussianEnsemble):
        return gaussian_hstar(q)
    if isinstance(spec, FourwiseRademacherEnsemble) and q == 2:
        return h_exact_independent(np.ones(spec.dim), np.ones(spec.dim))
    if isinstance(spec, AffineEnsemble) and not np.any(spec.shift):
        return exact_hstar(spec.base, q)
    return None


def coordinate_hstar(spec: EnsembleSpec, q: float) -> float | None:
    """max_j (E X[j]^{2q})^{1/q} / E X[j]², the per-coordinate 2q-vs-2 constant, where known."""
    if isinstance(spec, GaussianEnsemble):
        return gaussian_hstar(q)
    if isinstance(spec, FourwiseRademacherEnsemble):
        return 1.0
    if isinstance(spec, IndependentCoordsEnsemble):
        ratios = [law.abs_moment(2 * q) ** (1 / q) / law.second_moment for law in spec.laws if law.second_moment > 0]
        value = max(ratios, default=1.0)
        return value if math.isfinite(value) else None
    if isinstance(spec, ScalarMixedEnsemble):
        base = coordinate_hstar(spec.base, q)
        if base is None or spec.mixer.second_moment <= 0:
            return None
        mixer = spec.mixer.abs_moment(2 * q) ** (1 / q) / spec.mixer.second_moment
        return base * mixer if math.isfinite(mixer) else None
    return None


# ----------------------------------------------------------------------
# Power-trace lemma verifier
# ----------------------------------------------------------------------

TraceSampler = Callable[[np.random.Generator, int], NDArray[np.float64]]


def outer_product_traces(spec: EnsembleSpec) -> TraceSampler:
    """tr(XXᵀ) = |X|² for X drawn from ``spec``."""

    def sample(rng: np.random.Generator, trials: int) -> NDArray[np.float64]:
        seq = np.random.SeedSequence(int(rng.integers(0, 2**63)))
        rows = spec.draw(trials, seq)
        return np.einsum("ij,ij->i", rows, rows)

    return sample


def fixed_matrix_traces(matrix: SymMatrix | ArrayLike) -> TraceSampler:
    value = as_sym(matrix).trace()

    def sample(rng: np.random.Generator, trials: int) -> NDArray[np.float64]:
        return np.full(trials, value)

    return sample


def powertrace_check(
    sample_traces: TraceSampler, q: float, h: float, trials: int, seed: int
) -> CheckReport:
    """Monte Carlo E tr(A)^q against h^q (E tr A)^q.

    Holds whenever E⟨v,Av⟩^q ≤ h^q (E⟨v,Av⟩)^q for every unit v (caller's
    hypothesis). A violation is flagged only when the estimated gap exceeds
    CALIBRATION_SE delta-method standard errors.
    """
    if trials < 2:
        raise InputError("powertrace_check needs at least 2 trials")
    if q < 1:
        raise InputError("q must be ≥ 1")
    traces = np.asarray(sample_traces(make_rng(seed), trials), dtype=np.float64)
    if np.any(traces < -1e-12):
        raise InputError("sampled traces must be non-negative (A PSD)")
    traces = np.maximum(traces, 0.0)

    powered = traces**q
    lhs = float(powered.mean())
    m1 = float(traces.mean())
    rhs = h**q * m1**q

    # delta method on f(m_q, m_1) = m_q − h^q m_1^q
    grad = np.array([1.0, -q * h**q * m1 ** (q - 1)])
    cov = np.cov(np.vstack([powered, traces])) / trials
    se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    n_se = get_settings().CALIBRATION_SE
    passed = lhs - rhs <= n_se * se + 1e-12 * max(abs(rhs), 1.0)

    return CheckReport(
        name=f"powertrace(q={q:g})",
        estimate=lhs,
        bound=rhs,
        standard_error=se,
        passed=bool(passed),
        details={"q": q, "h": h, "mean_trace": m1, "trials": trials},
    )
