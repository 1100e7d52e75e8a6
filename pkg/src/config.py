"""
Runtime settings read from the environment (and .env when present)
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

logger = logging.getLogger(__name__)


def _int_env(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}")
        return default


class Settings(BaseModel):
    default_p: Optional[int] = Field(default=None, description="Fallback for --p (VIRASORO_P)")
    default_q: Optional[int] = Field(default=None, description="Fallback for --q (VIRASORO_Q)")
    level: int = Field(default=8, description="Default grading level (VIRASORO_LEVEL)")
    precision: int = Field(default=256, description="Default mpmath precision in bits (VIRASORO_PRECISION)")
    log_level: str = Field(default="WARNING", description="Root log level (VIRASORO_LOG_LEVEL)")
    verma_level_cap: int = Field(default=10, description="Largest level the Verma engine is asked for (VIRASORO_LEVEL_CAP)")


def get_settings() -> Settings:
    return Settings(
        default_p=_int_env("VIRASORO_P", None),
        default_q=_int_env("VIRASORO_Q", None),
        level=_int_env("VIRASORO_LEVEL", 8),
        precision=_int_env("VIRASORO_PRECISION", 256),
        log_level=os.getenv("VIRASORO_LOG_LEVEL", "WARNING").upper(),
        verma_level_cap=_int_env("VIRASORO_LEVEL_CAP", 10),
    )
