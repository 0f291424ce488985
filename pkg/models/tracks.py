"""
Track Models

Raw keypoint and action-unit tracks as read from disk, and the body
expressivity features derived from them.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from config.constants import AU_COLUMNS, AU_INTENSITY_RANGE, BODY_JOINTS, FACE_CHANNELS


@dataclass
class KeypointTrack:
    """
    Per-frame upper-body joint positions.

    Attributes:
        positions: (T, 4, 2) normalized image coordinates, joints in BODY_JOINTS
            order; NaN marks a joint that was not detected
        confidence: (T, 4) detection confidence in [0, 1]
        fps: Frames per second
    """

    positions: np.ndarray
    confidence: np.ndarray
    fps: float = 25.0
    joints: List[str] = field(default_factory=lambda: list(BODY_JOINTS))

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.confidence = np.asarray(self.confidence, dtype=np.float64)
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        n_joints = len(self.joints)
        if self.positions.ndim != 3 or self.positions.shape[1:] != (n_joints, 2):
            raise ValueError(f"positions must be (T, {n_joints}, 2), got {self.positions.shape}")
        if self.confidence.shape != self.positions.shape[:2]:
            raise ValueError(
                f"confidence shape {self.confidence.shape} does not match positions {self.positions.shape}"
            )
        finite_conf = self.confidence[np.isfinite(self.confidence)]
        if finite_conf.size and (finite_conf.min() < 0.0 or finite_conf.max() > 1.0):
            raise ValueError("confidence values must lie in [0, 1]")
        if np.isinf(self.positions).any():
            raise ValueError("positions must be finite or NaN")

    @property
    def n_frames(self) -> int:
        return int(self.positions.shape[0])


@dataclass
class AUTrack:
    """
    Face track: upper-face AU intensities, gaze angles and head pose.

    Attributes:
        values: (T, C) matrix, channels in FACE_CHANNELS order
        missing: (T,) True where the face tracker failed
        timestamps: (T,) seconds
    """

    values: np.ndarray
    missing: np.ndarray
    timestamps: np.ndarray
    channels: List[str] = field(default_factory=lambda: list(FACE_CHANNELS))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing = np.asarray(self.missing, dtype=bool)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.channels):
            raise ValueError(
                f"values must be (T, {len(self.channels)}), got {self.values.shape}"
            )
        if self.missing.shape != (self.values.shape[0],):
            raise ValueError("missing must have one flag per frame")
        au_idx = [self.channels.index(c) for c in AU_COLUMNS if c in self.channels]
        observed = self.values[~self.missing][:, au_idx]
        observed = observed[np.isfinite(observed)]
        lo, hi = AU_INTENSITY_RANGE
        if observed.size and (observed.min() < lo or observed.max() > hi):
            raise ValueError(f"AU intensities must lie in [{lo}, {hi}]")

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])


@dataclass
class BodyFeatureTrack:
    """
    Body expressivity features; NaN marks frames that could not be measured.

    Attributes:
        amplitude: (T,) wrist distance over bust height
        qom: (T,) silhouette area difference n frames apart
    """

    amplitude: np.ndarray
    qom: np.ndarray

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=np.float64)
        self.qom = np.asarray(self.qom, dtype=np.float64)
        if self.amplitude.shape != self.qom.shape:
            raise ValueError("amplitude and qom must have the same length")
        observed = self.amplitude[np.isfinite(self.amplitude)]
        if observed.size and observed.min() < 0:
            raise ValueError("amplitude must be non-negative")
        if np.isinf(self.qom).any():
            raise ValueError("qom must be finite or NaN")

    def to_matrix(self) -> np.ndarray:
        return np.stack([self.amplitude, self.qom], axis=1)
