"""
Application Settings Configuration for cardkit
"""

from typing import Optional, Tuple

from loguru import logger
from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings using Pydantic BaseSettings (env prefix CARDKIT_)"""

    # Solver Configuration
    solver: str = ""
    solver_timeout: float = 10.0
    backend: str = "solver"

    # Enumeration Domain Configuration
    int_min: int = -8
    int_max: int = 8
    param_min: int = -4
    param_max: int = 4
    array_length: int = 10
    enumeration_budget: int = 200_000
    enumeration_seed: int = 0

    # Inference Configuration
    max_iter: int = 10

    # Simulation Configuration
    seed_count: int = 1000
    max_steps: int = 5000
    explore_depth: int = 12
    backoff_base: int = 2

    # Logging Configuration
    log_level: str = "INFO"
    log_format: str = "console"
    log_file: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="CARDKIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("backend")
    @classmethod
    def validate_backend(cls, v: str) -> str:
        """Validate backend setting"""
        valid_backends = ["solver", "enumeration"]
        if v not in valid_backends:
            raise ValueError(f"Backend must be one of: {valid_backends}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level setting"""
        valid_levels = ["TRACE", "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        if v not in ("console", "json"):
            raise ValueError("Log format must be 'console' or 'json'")
        return v

    @field_validator(
        "solver_timeout", "array_length", "enumeration_budget", "max_iter",
        "seed_count", "max_steps", "explore_depth", "backoff_base",
    )
    @classmethod
    def validate_positive(cls, v):
        """All bounds must be positive"""
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @model_validator(mode="after")
    def validate_ranges(self) -> "Settings":
        if self.int_min >= self.int_max:
            raise ValueError("int_min must be smaller than int_max")
        if self.param_min > self.param_max:
            raise ValueError("param_min must not exceed param_max")
        return self

    @property
    def int_domain(self) -> Tuple[int, int]:
        """Inclusive integer range for store fields during enumeration"""
        return (self.int_min, self.int_max)

    @property
    def param_domain(self) -> Tuple[int, int]:
        """Inclusive integer range for effect parameters during enumeration"""
        return (self.param_min, self.param_max)


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get settings instance
    Loads settings from CARDKIT_* environment variables and .env file
    """
    global _settings

    if _settings is None:
        try:
            _settings = Settings()
            logger.debug(f"Settings loaded: backend={_settings.backend}, solver={_settings.solver or 'auto'}")
        except Exception as e:
            logger.error(f"Failed to load settings: {str(e)}")
            raise

    return _settings


def reload_settings() -> Settings:
    """
    Reload settings instance
    Useful for testing or when environment variables change
    """
    global _settings
    _settings = None
    return get_settings()


def override_settings(**updates) -> Settings:
    """Replace the global instance with a copy carrying command-line overrides"""
    global _settings
    current = get_settings()
    _settings = Settings(**{**current.model_dump(), **{k: v for k, v in updates.items() if v is not None}})
    return _settings
