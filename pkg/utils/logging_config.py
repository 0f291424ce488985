"""
Logging Configuration

Centralized logging for the `malefic` tool. Records go to stdout (and an
optional file); stderr carries nothing but JSON error payloads, so a
`--json` run keeps both streams machine-readable.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, TextIO, Union

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Third-party loggers that only matter when they warn
NOISY_LOGGERS = ("sklearn", "threadpoolctl", "numba", "matplotlib")


def resolve_level(level: Union[int, str]) -> int:
    """Numeric level for a number or a name such as "debug"; unknown names give INFO."""
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def setup_logging(
    level: Union[int, str] = logging.INFO,
    log_file: Optional[str] = None,
    format_string: Optional[str] = None,
    stream: Optional[TextIO] = None,
) -> None:
    """
    Configure the root logger.

    Args:
        level: Logging level, as a number or a name
        log_file: Optional path to a log file; parent directories are created
        format_string: Record format (default: DEFAULT_FORMAT)
        stream: Console stream (default: sys.stdout)
    """
    handlers = [logging.StreamHandler(stream or sys.stdout)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=resolve_level(level),
        format=format_string or DEFAULT_FORMAT,
        handlers=handlers,
        force=True,
    )
    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def setup_cli_logging(json_mode: bool, level: Union[int, str], log_file: Optional[str] = None) -> None:
    """Logging for one CLI command; JSON mode keeps only warnings and errors."""
    setup_logging(logging.WARNING if json_mode else level, log_file)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance with the given name.

    Args:
        name: Name for the logger (typically __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)
