"""
Logging
=======

loguru configuration for the command line and scripts.

Usage:
    from tspkit.log import setup_logging
    setup_logging()                 # level from TSPKIT_LOG (default info)
    setup_logging("debug", "run.log")
"""

import os
import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

LOG_ENV_VAR = "TSPKIT_LOG"

LOG_LEVELS = {
    "error": "ERROR",
    "warn": "WARNING",
    "warning": "WARNING",
    "info": "INFO",
    "debug": "DEBUG",
}


def resolve_level(level: Optional[str] = None) -> str:
    """Map a TSPKIT_LOG style name to a loguru level name."""
    name = (level or os.environ.get(LOG_ENV_VAR) or "info").strip().lower()
    if name not in LOG_LEVELS:
        logger.warning(f"Unknown {LOG_ENV_VAR}={name!r}, using info")
        return "INFO"
    return LOG_LEVELS[name]


def setup_logging(level: Optional[str] = None, log_file: Optional[Union[str, Path]] = None):
    """Configure logging."""
    log_level = resolve_level(level)
    logger.remove()

    # Console handler
    logger.add(
        sys.stderr,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>",
        level=log_level
    )

    # File handler
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            str(log_file),
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {message}",
            level="DEBUG"
        )
        logger.debug(f"Logging to: {log_file}")

    return log_level
