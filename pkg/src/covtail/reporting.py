"""Trial reports: per-trial rows, binomial aggregates and JSON/CSV emission."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Literal

import numpy as np
from scipy.stats import norm

from covtail.errors import CovtailError
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

try:
    VERSION = version("covtail")
except PackageNotFoundError:  # running from a source checkout
    VERSION = "0+unknown"

WILSON_Z = float(norm.ppf(0.975))

EmitFormat = Literal["json", "csv", "both"]


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays (recursively) into plain Python values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def wilson_interval(violations: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    f = violations / trials
    denom = 1.0 + z * z / trials
    center = (f + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(f * (1 - f) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def binomial_se(probability: float, trials: int) -> float:
    """Standard error of a frequency whose true probability equals ``probability``."""
    b = min(max(probability, 0.0), 1.0)
    return math.sqrt(b * (1 - b) / trials) if trials > 0 else math.inf


def frequency_passes(
    frequency: float, probability_bound: float, trials: int, n_se: float | None = None
) -> bool:
    """frequency ≤ bound + n_se·SE, with the SE computed at the bound."""
    n_se = get_settings().PASS_SE if n_se is None else n_se
    if probability_bound >= 1.0:
        return True
    return frequency <= probability_bound + n_se * binomial_se(probability_bound, trials)


@dataclass
class TrialRow:
    trial: int
    statistic: float
    bound: float
    violated: bool
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class CheckReport:
    """Outcome of one verifier: an estimate, the bound it is held to, and a verdict."""

    name: str
    estimate: float
    bound: float
    standard_error: float
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def to_row(self, index: int) -> TrialRow:
        return TrialRow(
            trial=index,
            statistic=float(self.estimate),
            bound=float(self.bound),
            violated=not self.passed,
            extras={"name": self.name, "standard_error": float(self.standard_error), **jsonable(self.details)},
        )


@dataclass
class TrialReport:
    experiment: str
    params: dict[str, Any]
    trials: int
    violations: int
    frequency: float
    wilson_low: float
    wilson_high: float
    bound_value: float | None
    vacuous: bool
    passed: bool | None
    target_probability: float | None = None
    rows: list[TrialRow] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = VERSION

    @classmethod
    def from_rows(
        cls,
        experiment: str,
        params: dict[str, Any],
        rows: list[TrialRow],
        *,
        target_probability: float | None,
        bound_value: float | None = None,
        vacuous: bool = False,
        flags: list[str] | None = None,
        extras: dict[str, Any] | None = None,
    ) -> TrialReport:
        """Aggregate rows; ``passed`` is None for vacuous runs.

        With a target probability the run passes when the violation frequency
        is within PASS_SE binomial standard errors of it; without one, every
        row must be unviolated.
        """
        trials = len(rows)
        violations = sum(1 for r in rows if r.violated)
        frequency = violations / trials if trials else 0.0
        low, high = wilson_interval(violations, trials)

        if vacuous:
            passed: bool | None = None
        elif target_probability is None:
            passed = violations == 0
        else:
            passed = frequency_passes(frequency, target_probability, trials)

        return cls(
            experiment=experiment,
            params=jsonable(params),
            trials=trials,
            violations=violations,
            frequency=frequency,
            wilson_low=low,
            wilson_high=high,
            bound_value=None if bound_value is None else float(bound_value),
            vacuous=vacuous,
            passed=passed,
            target_probability=target_probability,
            rows=rows,
            flags=list(flags or []),
            extras=jsonable(extras or {}),
        )

    @classmethod
    def from_checks(
        cls, experiment: str, params: dict[str, Any], checks: list[CheckReport], **kwargs: Any
    ) -> TrialReport:
        rows = [c.to_row(i) for i, c in enumerate(checks)]
        return cls.from_rows(experiment, params, rows, target_probability=None, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        d = jsonable(asdict(self))
        d["pass"] = d.pop("passed")
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrialReport:
        data = dict(data)
        data["passed"] = data.pop("pass")
        data["rows"] = [TrialRow(**r) for r in data.get("rows", [])]
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _prefix(path: Path) -> Path:
    return path.with_suffix("") if path.suffix in {".json", ".csv"} else path


def emit(report: TrialReport, fmt: EmitFormat, path: str | Path) -> list[Path]:
    """Write the report next to ``path`` (``.json`` full, ``.csv`` per-trial rows)."""
    if fmt not in ("json", "csv", "both"):
        raise CovtailError(f"Unknown report format {fmt!r}")
    prefix = _prefix(Path(path))
    written: list[Path] = []

    try:
        prefix.parent.mkdir(parents=True, exist_ok=True)
        if fmt in ("json", "both"):
            target = prefix.with_name(prefix.name + ".json")
            target.write_text(report.to_json() + "\n", encoding="utf-8")
            written.append(target)
        if fmt in ("csv", "both"):
            target = prefix.with_name(prefix.name + ".csv")
            with target.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["trial", "statistic", "bound", "violated"])
                for row in report.rows:
                    writer.writerow([row.trial, repr(float(row.statistic)), repr(float(row.bound)), int(row.violated)])
            written.append(target)
    except OSError as e:
        raise CovtailError(f"Cannot write report to {prefix}: {e}") from e

    for target in written:
        logger.info("Wrote %s", target)
    return written
