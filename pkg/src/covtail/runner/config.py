"""Experiment configuration: a JSON file, dotted ``--set`` overrides and pydantic validation.

Every experiment's params are validated (ensembles built, cones checked)
before any sampling starts; failures surface as ConfigError with the
offending field path.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from covtail.ensembles import ensemble_from_config
from covtail.errors import ConfigError
from covtail.sparse import ConeSpec

ExperimentName = Literal[
    "lowertail",
    "ols",
    "vector_sum",
    "re",
    "rudelson",
    "transfer",
    "lasso_rate",
    "verify_identities",
    "concentration",
]


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_ensemble(value: dict[str, Any]) -> dict[str, Any]:
    ensemble_from_config(value)
    return value


# ======================================================================
# Per-experiment params
# ======================================================================
class LowertailParams(_Params):
    ensemble: dict[str, Any] = Field(description="Ensemble spec, e.g. {'kind': 'gaussian', 'dim': 4}.")
    n: int = Field(gt=0, description="Samples per trial.")
    delta: float = Field(gt=0, lt=1, description="Failure probability δ.")
    h: float | None = Field(default=None, gt=1, description="Moment constant; closed form when omitted.")
    sigma: list[list[float]] | None = Field(default=None, description="Population Σ; derived from the ensemble when omitted.")
    truncation_level: float | None = Field(default=None, gt=0)
    epsilon: float | None = Field(default=None, gt=0, lt=1, description="Target relative deficit ε.")

    validate_ensemble = field_validator("ensemble")(_check_ensemble)


class OlsParams(_Params):
    design: dict[str, Any] = Field(description="Ensemble spec of the design vectors X.")
    beta_min: list[float] | None = Field(default=None, description="True coefficients; all ones when omitted.")
    noise_sigma: float = Field(default=1.0, ge=0)
    n: int = Field(gt=0)
    eta: float = Field(gt=0, le=1)
    epsilon: float = Field(gt=0, lt=1)
    delta: float = Field(gt=0, lt=1)
    q: float = Field(default=2.0, ge=2)
    h: float | None = None
    h_star: float | None = None

    validate_design = field_validator("design")(_check_ensemble)


class VectorSumParams(_Params):
    ensemble: dict[str, Any]
    n: int = Field(gt=0)
    eta: float = Field(gt=0, le=1)
    t: float = Field(ge=0)
    q: float = Field(default=2.0, ge=2)
    h_star: float | None = None
    lambda_matrix: list[list[float]] | None = None

    validate_ensemble = field_validator("ensemble")(_check_ensemble)


class ConeConfig(_Params):
    support: list[int] = Field(description="1-based indices of S.")
    alpha: float = Field(gt=0)

    def to_spec(self) -> ConeSpec:
        return ConeSpec.from_one_based(self.support, self.alpha)

    @field_validator("support")
    @classmethod
    def _one_based(cls, value: list[int]) -> list[int]:
        ConeSpec.from_one_based(value, 1.0)
        return value


class ReParams(_Params):
    ensemble: dict[str, Any]
    cone: ConeConfig
    epsilon: float = Field(gt=0, lt=0.5)
    delta: float = Field(gt=0, lt=0.5)
    n: int = Field(gt=0)
    q: float = Field(default=4.0, gt=2)
    h: float | None = None
    h_star: float | None = None
    probes: int = Field(default=200, gt=0)
    restarts: int = Field(default=8, gt=0)

    validate_ensemble = field_validator("ensemble")(_check_ensemble)


class RudelsonParams(_Params):
    instances: int = Field(default=200, gt=0)
    p_max: int = Field(default=8, ge=3)
    epsilon: float = Field(default=0.2, gt=0, lt=0.5)
    gamma: float = Field(default=0.1, gt=0)
    probes: int = Field(default=2000, gt=0)
    restarts: int = Field(default=8, gt=0)


class TransferParams(_Params):
    instances: int = Field(default=1000, gt=0)
    p_max: int = Field(default=10, ge=3)
    d_values: list[int] = Field(default_factory=lambda: [2, 3], min_length=1)
    probes: int = Field(default=10_000, gt=0)

    @field_validator("d_values")
    @classmethod
    def _at_least_two(cls, value: list[int]) -> list[int]:
        if any(d < 2 for d in value):
            raise ValueError("every d must be ≥ 2")
        return value


class LassoRateParams(_Params):
    ensemble: dict[str, Any]
    n_grid: list[int] = Field(min_length=1)
    s: int = Field(gt=0)
    noise_sigma: float = Field(default=1.0, ge=0)
    support: list[int] | None = Field(default=None, description="1-based S; the first s coordinates when omitted.")
    beta_scale: float = 1.0
    kappa: float | None = Field(default=None, gt=0)

    validate_ensemble = field_validator("ensemble")(_check_ensemble)


class VerifyIdentitiesParams(_Params):
    draws: int = Field(default=1_000_000, gt=1)
    instances: int = Field(default=1000, gt=0)
    bdg_trials: int = Field(default=20_000, gt=1)


class ConcentrationParams(_Params):
    pass


PARAMS_MODELS: dict[str, type[_Params]] = {
    "lowertail": LowertailParams,
    "ols": OlsParams,
    "vector_sum": VectorSumParams,
    "re": ReParams,
    "rudelson": RudelsonParams,
    "transfer": TransferParams,
    "lasso_rate": LassoRateParams,
    "verify_identities": VerifyIdentitiesParams,
    "concentration": ConcentrationParams,
}


# ======================================================================
# Top-level config
# ======================================================================
class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    params: dict[str, Any] = Field(default_factory=dict)
    master_seed: int = Field(default=0, ge=0, le=2**64 - 1)
    trials: int | None = Field(default=None, ge=1)
    workers: int | Literal["auto"] = 1
    output: str | None = None

    def typed_params(self) -> _Params:
        return PARAMS_MODELS[self.experiment].model_validate(self.params)

    def echo(self) -> dict[str, Any]:
        """The config fields that determine a report's numbers."""
        return self.model_dump(exclude={"workers", "output"})


def _config_error(error: ValidationError, prefix: str = "") -> ConfigError:
    first = error.errors()[0]
    path = ".".join(str(part) for part in first["loc"])
    if prefix:
        path = f"{prefix}.{path}" if path else prefix
    return ConfigError(first["msg"], path)


def validate_config(raw: dict[str, Any]) -> ExperimentConfig:
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise _config_error(e) from e
    try:
        config.typed_params()
    except ValidationError as e:
        raise _config_error(e, "params") from e
    return config


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}", "config") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}", "config") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object", "config")
    return raw


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``a.b.c=value`` assignments; values parse as JSON literals, else strings."""
    result = json.loads(json.dumps(raw))
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {item!r}", "--set")
        parts = key.split(".")
        node: Any = result
        for i, part in enumerate(parts[:-1]):
            if isinstance(node, list) and part.isdigit() and int(part) < len(node):
                node = node[int(part)]
            elif isinstance(node, dict):
                node = node.setdefault(part, {})
            else:
                raise ConfigError(f"cannot descend into {'.'.join(parts[: i + 1])}", key)
        last = parts[-1]
        if isinstance(node, list) and last.isdigit() and int(last) < len(node):
            node[int(last)] = _parse_value(text)
        elif isinstance(node, dict):
            node[last] = _parse_value(text)
        else:
            raise ConfigError(f"cannot assign into {key}", key)
    return result
