"""
app/config.py

Process-wide settings. Run-specific parameters live in RunConfig
(app/models/experiment_schemas.py); only the embedding endpoint is taken
from the environment.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Application
    APP_NAME: str = "scene-memory"
    APP_VERSION: str = "1.0.0"

    # Remote embedding service (disabled when EMBED_ENDPOINT is empty)
    EMBED_ENDPOINT: str = ""
    EMBED_MODEL: str = "text-embedding-3-large"
    EMBED_TIMEOUT_MS: int = 10000
    EMBED_DIMENSION: int = 256
    EMBED_MAX_RETRIES: int = 0
    EMBED_API_KEY: str = ""

    # Local embedder
    LOCAL_EMBED_DIMENSION: int = 256
    LOCAL_EMBED_SEED: int = 0x5EED

    # Memory defaults
    DEFAULT_RECALL_K: int = 3
    DEFAULT_PROTECTED_RATIO: float = 0.8
    DEFAULT_COUNTER_CAP: int = 15
    SKETCH_DEPTH: int = 4
    SKETCH_WIDTH_FACTOR: int = 8     # width = factor * capacity
    SKETCH_RESET_FACTOR: int = 10    # W = factor * capacity
    WARMUP_OCCUPANCY: float = 0.95
    DEFAULT_AREA_RADIUS: float = 1.5

    # Cost model
    DEFAULT_EXPLORE_COST: float = 5.0
    DEFAULT_GOTO_COST: float = 1.0

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
