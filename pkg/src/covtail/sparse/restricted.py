"""Restricted eigenvalues re(A, S, α): the largest R with R²|v_S|₂² ≤ vᵀAv on 𝒞(S, α).

The minimisation of vᵀAv over {|v_S|₂ = 1} ∩ 𝒞(S, α) is nonconvex. Each
restart runs projected gradient descent with an exterior cone penalty whose
weight grows ×10 per stage, renormalising |v_S|₂ after every step, and is then
polished by SLSQP inside the sign orthant it converged to. The best feasible
point over all restarts is the upper certificate; random cone probes try to
falsify it, and √λ_min(A) is the reported lower bracket.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from covtail.ensembles import make_rng, trial_seed
from covtail.errors import DivergedError, InputError, NotPSDError
from covtail.linalg import SymMatrix, as_sym, is_psd, op_norm_and_min_eig
from covtail.runner.executor import run_trials
from covtail.settings import get_settings
from covtail.sparse.cone import ConeSpec, cone_probes
from covtail.sparse.design import iter_supports

logger = logging.getLogger(__name__)

FALSIFICATION_PROBES = 2000
RESTART_CHUNK = 4


@dataclass(frozen=True, eq=False)
class REResult:
    value: float
    minimizer: NDArray[np.float64]
    certificate_gap: float
    lower_bound: float = 0.0
    restarts_used: int = 0
    support: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "minimizer": [float(x) for x in self.minimizer],
            "gap": self.certificate_gap,
            "lower_bound": self.lower_bound,
            "restarts_used": self.restarts_used,
            "support": [j + 1 for j in self.support],
        }


# ----------------------------------------------------------------------
# One restart
# ----------------------------------------------------------------------


def _into_cone(v: NDArray[np.float64], on: NDArray[np.intp], off: NDArray[np.intp], alpha: float) -> NDArray[np.float64] | None:
    """Normalise |v_S|₂ = 1 and shrink v_{S^c} onto the cone if it sticks out."""
    norm = float(np.linalg.norm(v[on]))
    if not math.isfinite(norm) or norm == 0.0:
        return None
    v = v / norm
    radius = alpha * float(np.abs(v[on]).sum())
    mass = float(np.abs(v[off]).sum())
    if mass > radius:
        v[off] *= radius / mass
    return v


def _initial_point(restart: int, rng: np.random.Generator, p: int, on: NDArray[np.intp], off: NDArray[np.intp], alpha: float) -> NDArray[np.float64]:
    kind = restart % 3
    v = np.zeros(p)
    if kind == 0:
        v = rng.standard_normal(p)
    elif kind == 1:
        v[on] = rng.standard_normal(on.size)
        if off.size:
            picked = rng.choice(off, size=min(2, off.size), replace=False)
            v[picked] = 0.5 * rng.standard_normal(picked.size)
    else:
        v[on] = rng.choice([-1.0, 1.0], size=on.size)
    v = _into_cone(v, on, off, alpha)
    if v is None:
        v = np.zeros(p)
        v[on] = 1.0 / math.sqrt(on.size)
    return v


def _penalized_descent(
    a: NDArray[np.float64], v: NDArray[np.float64], on: NDArray[np.intp], off: NDArray[np.intp],
    alpha: float, lam_max: float, stages: int, steps: int,
) -> NDArray[np.float64]:
    scale = max(lam_max, 1e-300)
    slope = off.size + alpha * alpha * on.size
    for stage in range(stages):
        weight = scale * 10.0**stage
        step = 1.0 / (2.0 * scale + 2.0 * weight * slope)
        for _ in range(steps):
            # gradient of vᵀAv / |v_S|² at |v_S| = 1
            av = a @ v
            grad = 2.0 * av
            grad[on] -= 2.0 * float(v @ av) * v[on]
            excess = np.abs(v[off]).sum() - alpha * np.abs(v[on]).sum()
            if excess > 0:
                grad[off] += 2.0 * weight * excess * np.sign(v[off])
                grad[on] -= 2.0 * weight * excess * alpha * np.sign(v[on])
            moved = v - step * grad
            norm = np.linalg.norm(moved[on])
            if not np.isfinite(norm) or norm == 0.0:
                return v
            v = moved / norm
    return v


def _polish(a: NDArray[np.float64], v: NDArray[np.float64], on: NDArray[np.intp], off: NDArray[np.intp], alpha: float) -> NDArray[np.float64]:
    """SLSQP in the orthant of v_S, with v_{S^c} split into positive and negative parts."""
    p, s, k = v.shape[0], on.size, off.size
    signs = np.where(v[on] >= 0, 1.0, -1.0)

    def unpack(z: NDArray[np.float64]) -> NDArray[np.float64]:
        full = np.zeros(p)
        full[on] = z[:s]
        full[off] = z[s : s + k] - z[s + k :]
        return full

    def objective(z: NDArray[np.float64]) -> float:
        x = unpack(z)
        return float(x @ a @ x)

    def gradient(z: NDArray[np.float64]) -> NDArray[np.float64]:
        g = 2.0 * (a @ unpack(z))
        return np.concatenate([g[on], g[off], -g[off]])

    constraints = [
        {
            "type": "eq",
            "fun": lambda z: float(z[:s] @ z[:s] - 1.0),
            "jac": lambda z: np.concatenate([2.0 * z[:s], np.zeros(2 * k)]),
        },
        {
            "type": "ineq",
            "fun": lambda z: float(alpha * signs @ z[:s] - z[s:].sum()),
            "jac": lambda z: np.concatenate([alpha * signs, -np.ones(2 * k)]),
        },
    ]
    bounds = [(0.0, None) if sg > 0 else (None, 0.0) for sg in signs] + [(0.0, None)] * (2 * k)
    z0 = np.concatenate([v[on], np.maximum(v[off], 0.0), np.maximum(-v[off], 0.0)])
    result = minimize(
        objective, z0, jac=gradient, bounds=bounds, constraints=constraints,
        method="SLSQP", options={"ftol": 1e-15, "maxiter": 500},
    )
    if not np.all(np.isfinite(result.x)):
        return v
    return unpack(result.x)


def _restart(a: NDArray[np.float64], cone: ConeSpec, restart: int, seed: int, lam_max: float) -> tuple[float, NDArray[np.float64]] | None:
    settings = get_settings()
    p = a.shape[0]
    on, off = cone.split(p)
    rng = make_rng(seed)
    v = _initial_point(restart, rng, p, on, off, cone.alpha)
    v = _penalized_descent(a, v, on, off, cone.alpha, lam_max, settings.RE_PENALTY_STAGES, settings.RE_STEPS_PER_STAGE)

    best: tuple[float, NDArray[np.float64]] | None = None
    for candidate in (v, _polish(a, v, on, off, cone.alpha)):
        feasible = _into_cone(candidate.copy(), on, off, cone.alpha)
        if feasible is None:
            continue
        value = float(feasible @ a @ feasible)
        if math.isfinite(value) and (best is None or value < best[0]):
            best = (value, feasible)
    return best


# ----------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------


def _falsify(a: NDArray[np.float64], cone: ConeSpec, value: float, seed: int, probes: int) -> tuple[float, NDArray[np.float64]] | None:
    if probes <= 0:
        return None
    on, _ = cone.split(a.shape[0])
    points = cone_probes(cone, a.shape[0], probes, make_rng(trial_seed(seed, 2**32)))
    norms = np.einsum("ij,ij->i", points[:, on], points[:, on])
    quad = np.einsum("ij,jk,ik->i", points, a, points)
    ratios = np.divide(quad, norms, out=np.full(probes, np.inf), where=norms > 0)
    i = int(np.argmin(ratios))
    if ratios[i] < value:
        logger.debug("random probe beat the optimizer: %.6g < %.6g", ratios[i], value)
        return float(ratios[i]), points[i] / math.sqrt(norms[i])
    return None


def restricted_eigenvalue(
    a: SymMatrix | ArrayLike,
    cone: ConeSpec,
    restarts: int | None = None,
    seed: int = 0,
    workers: int = 1,
    probes: int = FALSIFICATION_PROBES,
) -> REResult:
    """re(A, S, α) by multi-start penalised descent plus SLSQP polish."""
    a_sym = as_sym(a)
    if not is_psd(a_sym):
        raise NotPSDError("restricted eigenvalues need a PSD matrix")
    a = np.asarray(a_sym)
    cone.split(a.shape[0])
    restarts = get_settings().RE_RESTARTS if restarts is None else restarts
    lam_max, lam_min = op_norm_and_min_eig(a_sym)

    results = run_trials(
        lambda r, s: _restart(a, cone, r, s, lam_max), max(restarts, 1), seed, workers, chunk=RESTART_CHUNK
    )
    candidates = [r for r in results if r is not None]
    if not candidates:
        raise DivergedError(
            "restricted eigenvalue search produced no feasible point",
            {"restarts": restarts, "lambda_max": lam_max, "support": list(cone.support)},
        )
    value, minimizer = min(candidates, key=lambda c: (c[0], tuple(c[1])))

    improved = _falsify(a, cone, value, seed, probes)
    if improved is not None:
        value, minimizer = improved

    re_value = math.sqrt(max(value, 0.0))
    lower = math.sqrt(max(lam_min, 0.0))
    return REResult(
        value=re_value,
        minimizer=minimizer,
        certificate_gap=max(re_value - lower, 0.0),
        lower_bound=lower,
        restarts_used=len(candidates),
        support=cone.support,
    )


def restricted_eigenvalue_all(
    a: SymMatrix | ArrayLike,
    s: int,
    alpha: float,
    restarts: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> tuple[REResult, tuple[int, ...]]:
    """re(A, s, α) = min over |S| = s of re(A, S, α), with the minimising S (0-based)."""
    p = as_sym(a).dim
    if not 1 <= s <= p:
        raise InputError(f"support size {s} is not in 1..{p}")
    supports, _ = iter_supports(p, s)
    best: tuple[REResult, tuple[int, ...]] | None = None
    for index, support in enumerate(supports):
        result = restricted_eigenvalue(a, ConeSpec(support, alpha), restarts, trial_seed(seed, index), workers)
        if best is None or result.value < best[0].value:
            best = (result, support)
    assert best is not None
    return best
