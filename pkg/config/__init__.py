"""Configuration module for the MALEFIC classifier"""

from .settings import AppSettings, settings
from .constants import (
    BACKCHANNEL_LEXICON,
    FACE_CHANNELS,
    LABEL_ORDER,
    MODALITY_ORDER,
)

__all__ = [
    "AppSettings",
    "settings",
    "BACKCHANNEL_LEXICON",
    "FACE_CHANNELS",
    "LABEL_ORDER",
    "MODALITY_ORDER",
]
