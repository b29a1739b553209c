"""Ensemble specifications: the random vectors X the experiments draw from.

Every spec is an immutable value with ``dim``, ``draw(n, seed_sequence)``,
``mean()`` and ``second_moment()`` (the population Σ = E X X^T).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles.fourwise import fourwise_rademacher_batch, seed_bit_count
from covtail.ensembles.laws import ScalarLaw
from covtail.errors import InputError, NotPSDError
from covtail.linalg import SymMatrix, as_sym, is_psd, psd_sqrt

# Mixer tags with closed-form fourth moments.
MIXER_KINDS = frozenset({"constant", "rademacher", "student_t", "two_point"})


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    covariance: SymMatrix
    _root: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        cov = as_sym(self.covariance)
        if not is_psd(cov):
            raise NotPSDError("gaussian ensemble covariance must be PSD")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_root", np.asarray(psd_sqrt(cov)))

    @property
    def dim(self) -> int:
        return self.covariance.dim

    def draw(self, n: int, seq: np.random.SeedSequence) -> NDArray[np.float64]:
        rng = np.random.default_rng(seq)
        return rng.standard_normal((n, self.dim)) @ self._root

    def mean(self) -> NDArray[np.float64]:
        return np.zeros(self.dim)

    def second_moment(self) -> SymMatrix:
        return self.covariance


@dataclass(frozen=True)
class IndependentCoordsEnsemble:
    laws: tuple[ScalarLaw, ...]

    def __post_init__(self) -> None:
        if not self.laws:
            raise InputError("independent_coords needs at least one coordinate law")
        object.__setattr__(self, "laws", tuple(self.laws))
        for j, law in enumerate(self.laws):
            if not np.isfinite(law.fourth_moment):
                raise InputError(f"coordinate {j} law {law} has no finite fourth moment")

    @classmethod
    def iid(cls, law: ScalarLaw, p: int) -> IndependentCoordsEnsemble:
        return cls((law,) * p)

    @property
    def dim(self) -> int:
        return len(self.laws)

    def draw(self, n: int, seq: np.random.SeedSequence) -> NDArray[np.float64]:
        rng = np.random.default_rng(seq)
        return np.column_stack([law.sample(rng, n) for law in self.laws])

    def mean(self) -> NDArray[np.float64]:
        return np.array([law.mean for law in self.laws])

    def second_moment(self) -> SymMatrix:
        mu = self.mean()
        variances = np.array([law.variance for law in self.laws])
        return SymMatrix(np.diag(variances) + np.outer(mu, mu))


@dataclass(frozen=True)
class ScalarMixedEnsemble:
    """ξ·X with ξ ~ mixer independent of X ~ base."""

    base: EnsembleSpec
    mixer: ScalarLaw

    def __post_init__(self) -> None:
        if self.mixer.kind not in MIXER_KINDS:
            raise InputError(f"unsupported mixer tag {self.mixer.kind!r}; expected one of {sorted(MIXER_KINDS)}")
        if not np.isfinite(self.mixer.fourth_moment):
            raise InputError(f"mixer {self.mixer} has no finite fourth moment")

    @property
    def dim(self) -> int:
        return self.base.dim

    def draw(self, n: int, seq: np.random.SeedSequence) -> NDArray[np.float64]:
        base_seq, mixer_seq = seq.spawn(2)
        rows = self.base.draw(n, base_seq)
        xi = self.mixer.sample(np.random.default_rng(mixer_seq), n)
        return xi[:, None] * rows

    def mean(self) -> NDArray[np.float64]:
        return self.mixer.mean * self.base.mean()

    def second_moment(self) -> SymMatrix:
        return self.base.second_moment().scaled(self.mixer.second_moment)


@dataclass(frozen=True)
class FourwiseRademacherEnsemble:
    p: int

    def __post_init__(self) -> None:
        seed_bit_count(self.p)

    @property
    def dim(self) -> int:
        return self.p

    def draw(self, n: int, seq: np.random.SeedSequence) -> NDArray[np.float64]:
        rng = np.random.default_rng(seq)
        bits = rng.integers(0, 2, size=(n, seed_bit_count(self.p)))
        return fourwise_rademacher_batch(self.p, bits)

    def mean(self) -> NDArray[np.float64]:
        return np.zeros(self.p)

    def second_moment(self) -> SymMatrix:
        return SymMatrix.identity(self.p)


@dataclass(frozen=True, eq=False)
class AffineEnsemble:
    """A·Y + b for Y ~ base."""

    base: EnsembleSpec
    matrix: NDArray[np.float64]
    shift: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        if a.shape[1] != self.base.dim:
            raise InputError(
                f"affine matrix has {a.shape[1]} columns but the base ensemble has dim {self.base.dim}"
            )
        shift = np.zeros(a.shape[0]) if self.shift is None else np.asarray(self.shift, dtype=np.float64)
        if shift.shape != (a.shape[0],):
            raise InputError(f"affine shift must have length {a.shape[0]}, got shape {shift.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(shift))):
            raise InputError("affine matrix and shift must be finite")
        a.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "shift", shift)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def draw(self, n: int, seq: np.random.SeedSequence) -> NDArray[np.float64]:
        return self.base.draw(n, seq) @ self.matrix.T + self.shift

    def mean(self) -> NDArray[np.float64]:
        return self.matrix @ self.base.mean() + self.shift

    def second_moment(self) -> SymMatrix:
        a, b = self.matrix, self.shift
        cross = np.outer(a @ self.base.mean(), b)
        inner = a @ np.asarray(self.base.second_moment()) @ a.T
        return SymMatrix(inner + cross + cross.T + np.outer(b, b))


EnsembleSpec = Union[
    GaussianEnsemble,
    IndependentCoordsEnsemble,
    ScalarMixedEnsemble,
    FourwiseRademacherEnsemble,
    AffineEnsemble,
]


def population_mean(spec: EnsembleSpec) -> NDArray[np.float64]:
    return spec.mean()


def population_covariance(spec: EnsembleSpec) -> SymMatrix:
    """Σ = E X X^T (uncentred second-moment matrix)."""
    return spec.second_moment()


# ----------------------------------------------------------------------
# Config shapes
# ----------------------------------------------------------------------


def _matrix(raw: Any, name: str) -> NDArray[np.float64]:
    try:
        return np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name} must be a numeric array: {e}") from e


def ensemble_from_config(raw: dict[str, Any]) -> EnsembleSpec:
    """Build an ensemble from its JSON shape.

    ``{"kind": "gaussian", "dim": 4}`` or ``{"kind": "gaussian", "covariance": [[...]]}``,
    ``{"kind": "independent_coords", "law": {...}, "dim": p}`` or ``"laws": [...]``,
    ``{"kind": "scalar_mixed", "base": {...}, "mixer": {...}}``,
    ``{"kind": "fourwise_rademacher", "dim": p}``,
    ``{"kind": "affine", "base": {...}, "matrix": [[...]], "shift": [...]}``.
    """
    if not isinstance(raw, dict) or "kind" not in raw:
        raise InputError(f"ensemble config needs a 'kind' key, got {raw!r}")
    try:
        return _build_ensemble(raw)
    except KeyError as e:
        raise InputError(f"ensemble {raw['kind']!r} config is missing key {e}") from e


def _build_ensemble(raw: dict[str, Any]) -> EnsembleSpec:
    kind = raw["kind"]

    if kind == "gaussian":
        if "covariance" in raw:
            return GaussianEnsemble(SymMatrix(_matrix(raw["covariance"], "covariance")))
        return GaussianEnsemble(SymMatrix.identity(int(raw["dim"])))
    if kind == "independent_coords":
        if "laws" in raw:
            return IndependentCoordsEnsemble(tuple(ScalarLaw.from_config(x) for x in raw["laws"]))
        return IndependentCoordsEnsemble.iid(ScalarLaw.from_config(raw["law"]), int(raw["dim"]))
    if kind == "scalar_mixed":
        return ScalarMixedEnsemble(
            ensemble_from_config(raw["base"]), ScalarLaw.from_config(raw["mixer"])
        )
    if kind == "fourwise_rademacher":
        return FourwiseRademacherEnsemble(int(raw["dim"]))
    if kind == "affine":
        shift = raw.get("shift")
        return AffineEnsemble(
            ensemble_from_config(raw["base"]),
            _matrix(raw["matrix"], "matrix"),
            None if shift is None else _matrix(shift, "shift"),
        )
    raise InputError(f"Unknown ensemble kind {kind!r}")


def gaussian(cov: SymMatrix | ArrayLike) -> GaussianEnsemble:
    return GaussianEnsemble(as_sym(cov))
