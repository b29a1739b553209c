from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.ensembles.laws import ScalarLaw
from covtail.ensembles.seeding import as_seed_sequence
from covtail.ensembles.specs import EnsembleSpec, ScalarMixedEnsemble
from covtail.errors import InputError


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """n i.i.d. rows X_i, optionally paired with responses Y_i."""

    vectors: NDArray[np.float64]
    responses: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if x.shape[0] == 0:
            raise InputError("SampleBatch needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise InputError("SampleBatch vectors must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "vectors", x)

        if self.responses is not None:
            y = np.asarray(self.responses, dtype=np.float64).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise InputError(f"{y.shape[0]} responses for {x.shape[0]} samples")
            if not np.all(np.isfinite(y)):
                raise InputError("SampleBatch responses must be finite")
            y.setflags(write=False)
            object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def to_csv(self, path: str | Path) -> None:
        """Header ``x1,…,xp[,y]``, one sample per row, 17 significant digits."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = [f"x{j + 1}" for j in range(self.dim)]
        data = self.vectors
        if self.responses is not None:
            header.append("y")
            data = np.column_stack([data, self.responses])

        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([[f"{v:.17g}" for v in row] for row in data])


@dataclass(frozen=True, eq=False)
class LinearModelSpec:
    """Y = X^T β_min + σ·g with g standard normal, independent of X."""

    design: EnsembleSpec
    beta_min: NDArray[np.float64]
    noise_sigma: float = 1.0

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta_min, dtype=np.float64).reshape(-1)
        if beta.shape[0] != self.design.dim:
            raise InputError(f"beta_min has length {beta.shape[0]}, design has dim {self.design.dim}")
        if not np.all(np.isfinite(beta)):
            raise InputError("beta_min must be finite")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise InputError(f"noise_sigma must be ≥ 0, got {self.noise_sigma}")
        beta.setflags(write=False)
        object.__setattr__(self, "beta_min", beta)

    @property
    def dim(self) -> int:
        return self.design.dim


def _check_n(n: int) -> int:
    if int(n) < 1:
        raise InputError(f"sample count must be ≥ 1, got {n}")
    return int(n)


def sample_batch(spec: EnsembleSpec, n: int, seed: int | np.random.SeedSequence) -> SampleBatch:
    return SampleBatch(spec.draw(_check_n(n), as_seed_sequence(seed)))


def sample_linear_model(
    spec: LinearModelSpec, n: int, seed: int | np.random.SeedSequence
) -> SampleBatch:
    n = _check_n(n)
    design_seq, noise_seq = as_seed_sequence(seed).spawn(2)
    x = spec.design.draw(n, design_seq)
    noise = np.random.default_rng(noise_seq).standard_normal(n)
    return SampleBatch(x, x @ spec.beta_min + spec.noise_sigma * noise)


def scalar_mixed_sample(
    base: EnsembleSpec, mixer: ScalarLaw, n: int, seed: int | np.random.SeedSequence
) -> SampleBatch:
    return sample_batch(ScalarMixedEnsemble(base, mixer), n, seed)


def batch_from_arrays(vectors: ArrayLike, responses: ArrayLike | None = None) -> SampleBatch:
    return SampleBatch(np.asarray(vectors, dtype=np.float64), None if responses is None else np.asarray(responses))
