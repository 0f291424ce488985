"""Utils module for the MALEFIC classifier"""

from .logging_config import get_logger, setup_cli_logging, setup_logging
from .errors import MaleficError
from .sampling import session_split, spawn_generators, weighted_sampler
from .stamping import Stamp, config_hash, read_csv, write_csv, write_json

__all__ = [
    # Logging
    "setup_logging",
    "setup_cli_logging",
    "get_logger",
    # Errors
    "MaleficError",
    # Sampling
    "session_split",
    "spawn_generators",
    "weighted_sampler",
    # Stamping
    "Stamp",
    "config_hash",
    "read_csv",
    "write_csv",
    "write_json",
]
