"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI maps it to:
2 for usage / config / input problems, 3 for internal numeric failures.
Statistical check failures are reported, never raised.
"""

from __future__ import annotations

from typing import Any


class CovtailError(Exception):
    exit_code: int = 3


class InputError(CovtailError, ValueError):
    """Invalid input: non-finite entries, wrong shapes, dimension mismatch."""

    exit_code = 2


class NotPSDError(InputError):
    """A matrix required to be positive semidefinite has a negative eigenvalue."""


class SingularMatrixError(InputError):
    """A matrix required to be invertible is (numerically) singular."""


class RangeError(InputError):
    """A matrix has mass outside the range of a reference matrix."""


class InvalidMomentsError(InputError):
    """Moment metadata violates Jensen's inequality or is missing."""


class PreconditionError(InputError):
    """A documented precondition of a lemma or check does not hold."""


class CombinatorialBudgetError(InputError):
    """An exhaustive enumeration would exceed the configured budget."""


class ConfigError(InputError):
    """Experiment configuration failed schema validation."""

    def __init__(self, message: str, field_path: str = "") -> None:
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class DivergedError(CovtailError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CalibrationError(CovtailError, RuntimeError):
    """Sampled moments disagree with the declared ones beyond sampling error."""
