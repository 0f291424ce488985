"""Data extractors module"""

from .expressivity import (
    amplitude,
    interpolate_missing,
    median_filter,
    preprocess_track,
    quantity_of_motion,
)
from .track_io import read_au_csv, read_pose_jsonl
from .feature_pipeline import FeatureExtractor

__all__ = [
    "amplitude",
    "interpolate_missing",
    "median_filter",
    "preprocess_track",
    "quantity_of_motion",
    "read_au_csv",
    "read_pose_jsonl",
    "FeatureExtractor",
]
