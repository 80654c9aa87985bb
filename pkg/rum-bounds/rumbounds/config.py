"""Application configuration management."""

import logging
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def setup_logging(log_level: str = "INFO") -> None:
    """Setup human-readable logging configuration."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s | %(name)-25s | %(levelname)-8s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )

    # Set specific log levels for external libraries to reduce noise
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(f"🔧 Logging configured at level: {log_level}")


class Settings(BaseSettings):
    """Library and CLI settings loaded from environment variables.

    Values come from ``RUMBOUNDS_*`` environment variables or a ``.env`` file,
    with validated defaults for every numerical knob. Options given in a
    system file or on the command line take precedence over these.
    """

    tolerance: float = Field(1e-9, gt=0, description="Sign-classification tolerance τ")
    lp_tolerance: float = Field(1e-9, gt=0, description="Simplex pivoting and feasibility tolerance τ_lp")
    arithmetic: Literal["float", "exact"] = "float"
    keep_null_patches: bool = False
    max_types: int = Field(1_000_000, ge=1)
    max_iterations: int = Field(100_000, ge=1)
    verify_solutions: bool = False
    oracle_max_columns: int = Field(20, ge=1)
    oracle_max_combinations: int = Field(10_000_000, ge=1)
    debug: bool = False
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="RUMBOUNDS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


# Lazy loaded to allow for testing
def get_settings() -> Settings:
    """Get settings instance, creating it if needed."""
    logger = logging.getLogger(__name__)
    try:
        settings = Settings()
        logger.debug(f"✅ Configuration loaded (τ={settings.tolerance}, arithmetic={settings.arithmetic})")
        return settings
    except Exception as e:
        logger.error(f"❌ Failed to load configuration: {e}")
        raise
