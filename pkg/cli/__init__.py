"""Command-line interface for the MALEFIC classifier"""

from .app import create_parser
from .commands import COMMANDS, main

__all__ = [
    "create_parser",
    "COMMANDS",
    "main",
]
