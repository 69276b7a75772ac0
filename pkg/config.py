#!/usr/bin/env python3
"""
Environment defaults for the Epps pipeline command line
"""

import json
import logging
import os
from typing import Optional

from dotenv import load_dotenv

from epps_pipeline.errors import ConfigError
from epps_pipeline.ingest import TradeSchema

# Load environment variables from .env file if it exists
load_dotenv()

logger = logging.getLogger(__name__)

# Output and logging
DEFAULT_OUT_DIR = "epps_output"
DEFAULT_LOG_LEVEL = "INFO"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def env_out_dir() -> str:
    return os.getenv("EPPS_OUT_DIR") or DEFAULT_OUT_DIR


def env_log_level() -> str:
    level = (os.getenv("EPPS_LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"EPPS_LOG_LEVEL must be one of {LOG_LEVELS}, got {level!r}")
    return level


def env_threads() -> Optional[int]:
    raw = os.getenv("EPPS_THREADS")
    if not raw:
        return None
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigError(f"EPPS_THREADS must be an integer, got {raw!r}") from e
    if threads < 1:
        raise ConfigError(f"EPPS_THREADS must be at least 1, got {threads}")
    return threads


def env_master_seed() -> Optional[int]:
    raw = os.getenv("EPPS_MASTER_SEED")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"EPPS_MASTER_SEED must be an integer, got {raw!r}") from e


def env_trade_schema() -> Optional[TradeSchema]:
    """Column mapping from EPPS_TRADE_SCHEMA, e.g. {"time": "Time", "price": "Px"}."""
    raw = os.getenv("EPPS_TRADE_SCHEMA")
    if not raw:
        return None
    try:
        return TradeSchema.model_validate(json.loads(raw))
    except ValueError as e:
        raise ConfigError(f"EPPS_TRADE_SCHEMA is not a valid column mapping: {e}") from e


def validate_config() -> bool:
    """Check every EPPS_* variable and log the malformed ones."""
    problems = []
    for check in (env_log_level, env_threads, env_master_seed, env_trade_schema):
        try:
            check()
        except ConfigError as e:
            problems.append(str(e))

    if problems:
        logger.error("Malformed environment variables:")
        for problem in problems:
            logger.error(f"   - {problem}")
        logger.error("Fix them in the shell or in a .env file next to cli.py")
        return False

    return True
