"""Centralized logging configuration for mdr_indent runs."""
from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from pythonjsonlogger import jsonlogger

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _formatter(fmt: str) -> logging.Formatter:
    if fmt == "json":
        return jsonlogger.JsonFormatter(
            "%(asctime)s %(levelname)s %(name)s %(message)s",
            datefmt=DATE_FORMAT,
        )
    return logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)


def setup_logging(
    level: str = "INFO",
    log_dir: Optional[Path] = None,
    fmt: str = "text",
    file_name: str = "mdr_indent.log",
) -> None:
    """
    Configure the root logger with a console handler and an optional rotating file.

    The console handler writes to stderr so that command summaries on stdout stay
    machine-readable. When `log_dir` is given, DEBUG output is also written to
    `log_dir/file_name` (5MB max, 3 backups).
    """
    log_level = level.upper()
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if log_dir is not None else getattr(logging, log_level, logging.INFO))

    # Remove existing handlers to avoid duplicates on repeated invocations
    for handler in root_logger.handlers:
        handler.close()
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, log_level, logging.INFO))
    console_handler.setFormatter(_formatter(fmt))
    root_logger.addHandler(console_handler)

    log_file = None
    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / file_name
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=5_000_000,
            backupCount=3,
            encoding="utf-8",
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(_formatter(fmt))
        root_logger.addHandler(file_handler)

    logging.getLogger(__name__).debug("Logging configured: level=%s, file=%s", log_level, log_file)
