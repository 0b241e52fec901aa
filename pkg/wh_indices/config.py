from __future__ import annotations

import os
from pathlib import Path

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from wh_indices.numerics import Tolerances


ENV_PREFIX = "WH_"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_name(field: str) -> str:
    return f"{ENV_PREFIX}{field.upper()}"


def _describe(error: dict) -> str:
    loc = error.get("loc") or ("settings",)
    name = _env_name(str(loc[0]))
    kind = error.get("type", "")
    ctx = error.get("ctx") or {}
    if kind == "greater_than":
        return f"{name} must be > {ctx.get('gt')}"
    if kind in {"int_parsing", "int_from_float"}:
        return f"{name} must be an integer"
    if kind in {"float_parsing", "finite_number"}:
        return f"{name} must be a finite number"
    return f"{name}: {error.get('msg', 'invalid value')}"


class Settings(BaseSettings):
    """
    Runtime configuration, read from WH_* environment variables.

    CLI flags override these values; the defaults mirror numerics.Tolerances.
    """

    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, frozen=True, extra="ignore", env_ignore_empty=True)

    tol_rank: float = Field(default=1e-9, gt=0, allow_inf_nan=False)
    tol_eig: float = Field(default=1e-8, gt=0, allow_inf_nan=False)
    tol_residual: float = Field(default=1e-8, gt=0, allow_inf_nan=False)
    oracle_n_max: int | None = Field(default=None, gt=0)
    stein_direct_limit: int = Field(default=4096, gt=0)
    max_workers: int = Field(default=4, gt=0)
    log_level: str = "WARNING"

    @field_validator("log_level", mode="before")
    @classmethod
    def _normalize_log_level(cls, value: object) -> str:
        level = str(value).strip().upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"must be one of {', '.join(LOG_LEVELS)}")
        return level

    @staticmethod
    def from_env() -> "Settings":
        env_file: Path | None = None
        # WH_ENV_FILE names an extra env file; values already in the process environment win.
        raw = os.getenv("WH_ENV_FILE")
        if raw:
            p = Path(raw)
            if p.is_file():
                env_file = p

        # .env in the working directory, if any.
        try:  # pragma: no cover
            from dotenv import load_dotenv

            load_dotenv()
        except Exception:
            pass

        try:
            return Settings(_env_file=env_file)
        except ValidationError as exc:
            raise ValueError(_describe(exc.errors()[0])) from exc

    def tolerances(self) -> Tolerances:
        return Tolerances(rank_rel=self.tol_rank, eig_one=self.tol_eig, residual=self.tol_residual)
