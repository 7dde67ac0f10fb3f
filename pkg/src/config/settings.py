"""Pydantic-based process settings for EMOS pooling.

This module provides centralized configuration management using pydantic-settings,
supporting environment variables (prefix ``POOLING_``) and .env file loading.
Run-level choices such as window length or bootstrap size live in
``PipelineConfig`` instead (see ``src.config.loader``).
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings with environment variable support.

    All settings can be overridden via environment variables, e.g.
    ``POOLING_LOG_LEVEL=DEBUG`` or ``POOLING_GRID_POINTS=40001``.
    """

    model_config = SettingsConfigDict(
        env_prefix="POOLING_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    environment: Literal["development", "production", "test"] = "development"
    log_level: str = "INFO"

    # Parallel cold-start fitting and bootstrap chunks
    max_workers: int = Field(default=4, ge=1)

    # Optimizer Settings
    optimizer_max_iter: int = Field(default=200, ge=1)
    optimizer_gtol: float = Field(default=1e-6, gt=0.0)
    fail_on_nonconvergence: bool = False

    # Quadrature Settings
    grid_points: int = Field(default=20_001, ge=2)  # evaluation grid
    fit_grid_points: int = Field(default=501, ge=2)  # inside combination optimizers
    grid_tail_probability: float = Field(default=1e-7, gt=0.0, lt=0.5)
    grid_bulk_probability: float = Field(default=0.99, gt=0.5, lt=1.0)  # end of uniform spacing


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Settings: The process settings instance.
    """
    return Settings()
