"""Configuration settings for the RxO relational machine and its shell."""

from pathlib import Path
from typing import Optional
from pydantic import Field
try:
    from pydantic_settings import BaseSettings, SettingsConfigDict
except ImportError:
    from pydantic import BaseSettings
    SettingsConfigDict = dict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_prefix="RXO_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Database file used when --db is not given
    db: Optional[Path] = None

    # Shell behaviour
    autosave: bool = True
    output_format: str = Field(default="table", pattern="^(table|tsv)$")
    log_level: str = "WARNING"

    # O-view reference expansion bound
    max_expansion_depth: int = Field(default=8, ge=1)


# Global settings instance
settings = Settings()
