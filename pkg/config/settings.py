"""
MALEFIC Application Settings

This module provides centralized configuration management using Pydantic Settings.
Settings can be overridden via environment variables with MALEFIC_ prefix.
"""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="MALEFIC_",
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # ===== Paths =====
    artifacts_dir: str = "artifacts"

    # ===== Run Defaults =====
    default_preset: str = "tiny"
    default_seed: int = 13

    # ===== Resources =====
    threads: int = Field(default=1, ge=1)

    # ===== Logging & Errors =====
    log_level: str = "INFO"
    log_file: Optional[str] = None
    json_errors: bool = False
    show_progress: bool = False


# Global settings instance
settings = AppSettings()
