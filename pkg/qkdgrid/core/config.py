"""
Configuration management for qkdgrid
"""

from functools import lru_cache
from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Pulses/second. With the default protocol parameters this gives a key
# generation speed of about 1.3 kbit/s at L = 50 km (20 packets/s of 64-bit keys).
DEFAULT_PULSE_RATE = 4.9e6


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="QKDGRID_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging Configuration
    log_level: str = Field("INFO")
    log_format: str = Field("json", pattern="^(json|console)$")

    # API Configuration
    api_host: str = Field("0.0.0.0")
    api_port: int = Field(8000)
    api_reload: bool = Field(False)
    cors_origins: List[str] = Field(default_factory=list)

    # Simulation Configuration
    output_dir: str = Field("results")
    default_pulse_rate: float = Field(DEFAULT_PULSE_RATE, gt=0)
    sweep_workers: int = Field(1, ge=1)

    # Loopback transport
    loopback_host: str = Field("127.0.0.1")
    loopback_base_port: int = Field(0, ge=0)

    environment: str = Field("development")


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
