"""Runtime configuration using Pydantic Settings."""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables.

    Experiment parameters do not live here; they travel with each run in
    ``ExperimentConfig`` so that results stay reproducible.
    """

    model_config = SettingsConfigDict(
        env_prefix="MORPHOPOET_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Application
    app_name: str = "morphopoet"

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Runs
    default_output_dir: str = "runs"
    default_workers: int = 1


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
