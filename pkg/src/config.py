"""Runtime settings read from the environment (BASKET_* variables and .env)."""

import os
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide knobs. Per-run numerics live in the pricers' config dataclasses."""

    model_config = SettingsConfigDict(
        env_prefix="BASKET_",
        env_file=".env",
        extra="ignore",
    )

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    log_level: str = "INFO"

    mc_paths: int = Field(default=100_000, ge=2)
    mc_steps_per_year: int = Field(default=200, ge=1)
    mc_block_size: int = Field(default=4096, ge=2)
    mc_seed: int = 42

    pide_strikes: int = Field(default=400, ge=10)
    pide_steps_per_year: int = Field(default=400, ge=1)

    port: int = Field(default=8080, validation_alias="PORT")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings instance."""
    return Settings()
