# runner/logging.py
from __future__ import annotations
import os, sys, logging
from pathlib import Path
from typing import Optional, Union
from loguru import logger


def _intercept_std_logging(level: str):
    class InterceptHandler(logging.Handler):
        def emit(self, record):
            try:
                lvl = logger.level(record.levelname).name
            except ValueError:
                lvl = record.levelno
            logger.bind(name=record.name).opt(
                depth=6, exception=record.exc_info
            ).log(lvl, record.getMessage())
    logging.root.handlers = [InterceptHandler()]
    logging.root.setLevel(level)
    for name in ("shapely", "shapely.geos"):
        logging.getLogger(name).handlers = [InterceptHandler()]
        logging.getLogger(name).propagate = False


def setup_logging(level: str = "INFO", log_path: Optional[Union[str, Path]] = None) -> Optional[int]:
    """Console sink on stderr (stdout is reserved for command output), plus
    an optional rotating file sink whose handler id is returned."""
    logger.remove()  # reset sinks per run

    logger.add(
        sys.stderr,
        level=level.upper(),
        colorize=True,
        backtrace=False,
        diagnose=False,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
               "<level>{level: <7}</level> | {message}",
    )

    file_sink = None
    if log_path is not None:
        os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
        file_sink = logger.add(
            str(log_path),
            level="DEBUG",
            backtrace=True,
            diagnose=False,
            rotation="5 MB",
            retention="14 days",
            compression="zip",
            format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <7} | {message}",
        )

    _intercept_std_logging(level.upper())
    return file_sink
