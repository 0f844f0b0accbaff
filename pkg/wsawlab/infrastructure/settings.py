"""Process-level settings read from ``WSAW_*`` environment variables."""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class WsawSettings(BaseSettings):
    """Runtime knobs that are not part of an experiment's scientific config.

    None of them change results; ``workers`` only changes how enumeration
    and chain-growth work is spread over processes.
    """

    model_config = SettingsConfigDict(env_prefix="WSAW_", extra="ignore")

    log_level: str = Field("INFO", description="Minimum structlog level")
    log_format: Literal["console", "json"] = Field("console", description="Log renderer")
    workers: int = Field(1, ge=1, description="Processes for enumeration and PERM tours")
    node_budget: int = Field(50_000_000, ge=1, description="Default enumeration node cap")
    output_dir: str = Field("results", description="Default directory for run outputs")


@lru_cache(maxsize=1)
def get_settings() -> WsawSettings:
    return WsawSettings()
