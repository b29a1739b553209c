"""Scalar distribution tags with closed-form absolute moments.

A single ``ScalarLaw`` type serves as the mixer of scalar-mixed ensembles,
the per-coordinate law of independent-coordinate ensembles, and the ``W``
law of the concentration verifiers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from covtail.errors import InputError

LawKind = Literal[
    "constant", "rademacher", "gaussian", "exponential", "student_t", "two_point", "uniform"
]

_ARITY: dict[str, tuple[str, ...]] = {
    "constant": ("value",),
    "rademacher": (),
    "gaussian": ("scale",),
    "exponential": ("rate",),
    "student_t": ("df",),
    "two_point": ("a", "b", "prob"),
    "uniform": ("low", "high"),
}


@dataclass(frozen=True)
class ScalarLaw:
    kind: LawKind
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _ARITY:
            raise InputError(f"Unknown scalar law {self.kind!r}; expected one of {sorted(_ARITY)}")
        names = _ARITY[self.kind]
        if len(self.params) != len(names):
            raise InputError(f"Law {self.kind!r} takes parameters {names}, got {self.params}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if not all(math.isfinite(v) for v in self.params):
            raise InputError(f"Law {self.kind!r} parameters must be finite")

        if self.kind == "gaussian" and self.params[0] < 0:
            raise InputError("gaussian scale must be ≥ 0")
        if self.kind == "exponential" and self.params[0] <= 0:
            raise InputError("exponential rate must be > 0")
        if self.kind == "student_t" and self.params[0] <= 0:
            raise InputError("student_t df must be > 0")
        if self.kind == "two_point" and not 0.0 <= self.params[2] <= 1.0:
            raise InputError("two_point prob must lie in [0, 1]")
        if self.kind == "uniform" and not self.params[0] < self.params[1]:
            raise InputError("uniform needs low < high")

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> ScalarLaw:
        return cls("constant", (value,))

    @classmethod
    def rademacher(cls) -> ScalarLaw:
        return cls("rademacher")

    @classmethod
    def gaussian(cls, scale: float = 1.0) -> ScalarLaw:
        return cls("gaussian", (scale,))

    @classmethod
    def exponential(cls, rate: float = 1.0) -> ScalarLaw:
        return cls("exponential", (rate,))

    @classmethod
    def student_t(cls, df: float) -> ScalarLaw:
        return cls("student_t", (df,))

    @classmethod
    def two_point(cls, a: float, b: float, prob: float) -> ScalarLaw:
        """ξ = a with probability ``prob``, else b."""
        return cls("two_point", (a, b, prob))

    @classmethod
    def uniform(cls, low: float, high: float) -> ScalarLaw:
        return cls("uniform", (low, high))

    @classmethod
    def from_config(cls, raw: dict[str, Any]) -> ScalarLaw:
        """Build from ``{"kind": ..., "params": [...]}``."""
        if not isinstance(raw, dict) or "kind" not in raw:
            raise InputError(f"Scalar law config needs a 'kind' key, got {raw!r}")
        return cls(raw["kind"], tuple(raw.get("params", ())))

    def to_config(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": list(self.params)}

    # -- moments ------------------------------------------------------

    def abs_moment(self, q: float) -> float:
        """E|ξ|^q (``inf`` when the moment does not exist)."""
        if q < 0:
            raise InputError("moment order must be ≥ 0")
        if q == 0:
            return 1.0
        k = self.kind
        if k == "constant":
            return abs(self.params[0]) ** q
        if k == "rademacher":
            return 1.0
        if k == "gaussian":
            s = self.params[0]
            if s == 0:
                return 0.0
            log_m = q * math.log(s) + (q / 2) * math.log(2.0) + gammaln((q + 1) / 2) - 0.5 * math.log(math.pi)
            return float(math.exp(log_m))
        if k == "exponential":
            r = self.params[0]
            return float(math.exp(gammaln(q + 1) - q * math.log(r)))
        if k == "student_t":
            nu = self.params[0]
            if q >= nu:
                return math.inf
            log_m = (
                (q / 2) * math.log(nu)
                + gammaln((q + 1) / 2)
                + gammaln((nu - q) / 2)
                - 0.5 * math.log(math.pi)
                - gammaln(nu / 2)
            )
            return float(math.exp(log_m))
        if k == "two_point":
            a, b, prob = self.params
            return prob * abs(a) ** q + (1 - prob) * abs(b) ** q
        # uniform: ∫|x|^q dx / (hi - lo) with antiderivative sign(x)|x|^{q+1}/(q+1)
        lo, hi = self.params

        def antiderivative(x: float) -> float:
            return math.copysign(abs(x) ** (q + 1), x) / (q + 1)

        return (antiderivative(hi) - antiderivative(lo)) / (hi - lo)

    @property
    def second_moment(self) -> float:
        return self.abs_moment(2)

    @property
    def fourth_moment(self) -> float:
        return self.abs_moment(4)

    @property
    def mean(self) -> float:
        k = self.kind
        if k == "constant":
            return self.params[0]
        if k == "exponential":
            return 1.0 / self.params[0]
        if k == "two_point":
            a, b, prob = self.params
            return prob * a + (1 - prob) * b
        if k == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        if k == "student_t" and self.params[0] <= 1:
            return math.nan
        return 0.0

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @property
    def is_nonnegative(self) -> bool:
        k = self.kind
        if k == "constant":
            return self.params[0] >= 0
        if k == "exponential":
            return True
        if k == "two_point":
            a, b, prob = self.params
            return (a >= 0 or prob == 0) and (b >= 0 or prob == 1)
        if k == "uniform":
            return self.params[0] >= 0
        if k == "gaussian":
            return self.params[0] == 0
        return False

    # -- sampling -----------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> NDArray[np.float64]:
        k = self.kind
        if k == "constant":
            return np.full(size, self.params[0], dtype=np.float64)
        if k == "rademacher":
            return 1.0 - 2.0 * rng.integers(0, 2, size=size).astype(np.float64)
        if k == "gaussian":
            return self.params[0] * rng.standard_normal(size)
        if k == "exponential":
            return rng.exponential(1.0 / self.params[0], size)
        if k == "student_t":
            return rng.standard_t(self.params[0], size)
        if k == "two_point":
            a, b, prob = self.params
            return np.where(rng.random(size) < prob, a, b).astype(np.float64)
        return rng.uniform(self.params[0], self.params[1], size)

    def __str__(self) -> str:
        args = ", ".join(f"{v:g}" for v in self.params)
        return f"{self.kind}({args})"
