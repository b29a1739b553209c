from __future__ import annotations

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # None means "auto" (one worker per CPU).
    COVTAIL_WORKERS: int | None = None
    COVTAIL_LOG_LEVEL: str = "WARNING"

    RANK_TOL: float = 1e-12
    PSD_TOL: float = 1e-10
    SYMMETRY_TOL: float = 1e-8

    PASS_SE: float = 3.0
    CALIBRATION_SE: float = 5.0

    DEFAULT_TRIALS: int = 200
    EXTENDED_TRIALS: int = 10_000
    TRIAL_CHUNK: int = 64

    RE_RESTARTS: int = 32
    RE_PENALTY_STAGES: int = 5
    RE_STEPS_PER_STAGE: int = 150
    COMBINATORIAL_BUDGET: int = 100_000

    LASSO_KAPPA: float = 4.0
    LASSO_TOL: float = 1e-8
    LASSO_MAX_ITERS: int = 10_000


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def reset_settings_cache() -> None:
    get_settings.cache_clear()
