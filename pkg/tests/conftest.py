"""Shared fixtures for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from covtail.linalg import SymMatrix
from covtail.settings import reset_settings_cache
from covtail.sparse import ConeSpec


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Every test starts from default settings, whatever the environment says."""
    for name in ("COVTAIL_WORKERS", "COVTAIL_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    reset_settings_cache()
    yield
    reset_settings_cache()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_random_psd(rng: np.random.Generator, p: int, floor: float = 0.1) -> SymMatrix:
    """Well-conditioned PSD matrix with λ_min ≥ floor."""
    m = rng.standard_normal((p, p))
    return SymMatrix(m @ m.T / p + floor * np.eye(p))


@pytest.fixture
def random_psd(rng):
    """Factory fixture: random_psd(p) -> SymMatrix."""
    return lambda p, floor=0.1: make_random_psd(rng, p, floor)


@pytest.fixture
def lowertail_config():
    """Small lowertail run with a closed-form bound."""
    return {
        "experiment": "lowertail",
        "params": {"ensemble": {"kind": "gaussian", "dim": 3}, "n": 400, "delta": 0.1, "h": 6},
        "master_seed": 11,
        "trials": 12,
    }


# ----------------------------------------------------------------------
# Brute-force restricted eigenvalue
# ----------------------------------------------------------------------


def _project_l1_rows(x: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of x onto the ℓ1 ball of the matching radius."""
    u = np.abs(x)
    inside = u.sum(axis=1) <= radius
    s = -np.sort(-u, axis=1)
    cs = np.cumsum(s, axis=1)
    j = np.arange(1, x.shape[1] + 1)
    positive = s - (cs - radius[:, None]) / j > 0
    rho = x.shape[1] - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = (cs[np.arange(x.shape[0]), rho] - radius) / (rho + 1)
    shrunk = np.sign(x) * np.maximum(u - theta[:, None], 0.0)
    return np.where(inside[:, None], x, shrunk)


def brute_force_re(a, cone: ConeSpec, grid: int = 720, iterations: int = 4000) -> float:
    """re(A, S, α) for |S| ≤ 2 by an angle grid over v_S and exact convex solves over v_{S^c}.

    For fixed v_S the problem in v_{S^c} is a convex quadratic over an ℓ1
    ball, solved here by projected gradient descent.
    """
    a = np.asarray(a, dtype=np.float64)
    p = a.shape[0]
    on, off = cone.split(p)
    if on.size == 1:
        heads = np.ones((1, 1))
    elif on.size == 2:
        theta = np.linspace(0.0, math.pi, grid, endpoint=False)
        heads = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        raise ValueError("brute force handles |S| ≤ 2 only")

    base = np.einsum("gi,ij,gj->g", heads, a[np.ix_(on, on)], heads)
    if off.size == 0:
        return math.sqrt(max(float(base.min()), 0.0))

    a_off = a[np.ix_(off, off)]
    cross = heads @ a[np.ix_(on, off)]
    radius = cone.alpha * np.abs(heads).sum(axis=1)
    step = 1.0 / (2.0 * max(np.linalg.eigvalsh(a_off)[-1], 1e-12))
    w = np.zeros((heads.shape[0], off.size))
    for _ in range(iterations):
        grad = 2.0 * (w @ a_off + cross)
        w = _project_l1_rows(w - step * grad, radius)
    values = base + 2.0 * np.einsum("gi,gi->g", cross, w) + np.einsum("gi,ij,gj->g", w, a_off, w)
    return math.sqrt(max(float(values.min()), 0.0))


@pytest.fixture
def re_oracle():
    return brute_force_re
