"""Cones 𝒞(S, α) = {v : |v_{S^c}|₁ ≤ α|v_S|₁} and random members of them."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.errors import InputError

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class ConeSpec:
    """Support S (0-based, sorted) and aperture α > 0."""

    support: tuple[int, ...]
    alpha: float

    def __post_init__(self) -> None:
        support = tuple(sorted(int(j) for j in self.support))
        if not support:
            raise InputError("cone support must be nonempty")
        if len(set(support)) != len(support):
            raise InputError(f"cone support has repeated indices: {self.support}")
        if support[0] < 0:
            raise InputError(f"cone support indices must be ≥ 0, got {self.support}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InputError(f"cone alpha must be > 0, got {self.alpha}")
        object.__setattr__(self, "support", support)

    @classmethod
    def from_one_based(cls, support: Iterable[int], alpha: float) -> ConeSpec:
        indices = [int(j) for j in support]
        if any(j < 1 for j in indices):
            raise InputError(f"1-based support indices must be ≥ 1, got {indices}")
        return cls(tuple(j - 1 for j in indices), alpha)

    @property
    def s(self) -> int:
        return len(self.support)

    def one_based(self) -> list[int]:
        return [j + 1 for j in self.support]

    def alpha_tilde(self, epsilon: float) -> float:
        """α√((1+ε)/(1−ε))."""
        if not 0.0 <= epsilon < 1.0:
            raise InputError(f"epsilon must lie in [0, 1), got {epsilon}")
        return self.alpha * math.sqrt((1.0 + epsilon) / (1.0 - epsilon))

    def with_alpha(self, alpha: float) -> ConeSpec:
        return ConeSpec(self.support, alpha)

    def split(self, p: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        """Index arrays of S and S^c in R^p."""
        if self.support[-1] >= p:
            raise InputError(f"cone support {self.one_based()} does not fit in dimension {p}")
        on = np.array(self.support, dtype=np.intp)
        off = np.setdiff1d(np.arange(p), on)
        return on, off


def cone_excess(v: ArrayLike, cone: ConeSpec) -> float:
    """|v_{S^c}|₁ − α|v_S|₁; members have excess ≤ 0."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    on, off = cone.split(v.shape[0])
    return float(np.abs(v[off]).sum() - cone.alpha * np.abs(v[on]).sum())


def cone_membership(v: ArrayLike, cone: ConeSpec) -> bool:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    return cone_excess(v, cone) <= MEMBERSHIP_TOL * float(np.abs(v).sum())


def cone_probes(cone: ConeSpec, p: int, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``count`` members of 𝒞(S, α) as rows.

    Rows alternate between dense off-support parts, sparse off-support parts
    and points on the cone boundary; the on-support part is Gaussian.
    """
    on, off = cone.split(p)
    probes = np.zeros((count, p))
    probes[:, on] = rng.standard_normal((count, on.size))
    if off.size == 0:
        return probes

    w = rng.standard_normal((count, off.size))
    kind = np.arange(count) % 3
    sparse_rows = kind == 1
    if np.any(sparse_rows):
        keep = rng.random((int(sparse_rows.sum()), off.size)) < min(1.0, 2.0 / off.size)
        w[sparse_rows] *= keep
    radius = cone.alpha * np.abs(probes[:, on]).sum(axis=1)
    fraction = np.where(kind == 2, 1.0, rng.random(count))
    norms = np.abs(w).sum(axis=1)
    scale = np.divide(fraction * radius, norms, out=np.zeros(count), where=norms > 0)
    probes[:, off] = w * scale[:, None]
    return probes
