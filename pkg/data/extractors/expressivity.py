"""
Expressivity Features

Body amplitude and quantity of motion from upper-body keypoints, and the
smoothing applied to both body and face tracks before encoding.

The silhouette of a frame is the axis-aligned bounding box around both
wrists, the neck and the mid-hip. Bust height H is the neck to mid-hip
distance. Joints below JOINT_CONFIDENCE_THRESHOLD are treated as missing.
"""

import logging
from typing import Union

import numpy as np
import pandas as pd

from config.constants import (
    BODY_CHANNELS,
    BODY_JOINTS,
    FRAMING_EPS,
    JOINT_CONFIDENCE_THRESHOLD,
    MEDIAN_KERNEL,
    QOM_LAG_FRAMES,
)
from models.tracks import AUTrack, BodyFeatureTrack, KeypointTrack
from utils.errors import DegenerateFramingError, MissingDataError, ParameterError

logger = logging.getLogger(__name__)

LEFT_WRIST, RIGHT_WRIST, NECK, MID_HIP = (
    BODY_JOINTS.index(j) for j in ("left_wrist", "right_wrist", "neck", "mid_hip")
)


def median_filter(series, kernel: int = MEDIAN_KERNEL) -> np.ndarray:
    """
    Centered running median.

    Near the edges the window shrinks symmetrically so that it stays
    centered on i: out[i] is the median of series[i-h : i+h+1] with
    h = min(kernel // 2, i, n - 1 - i). The first and last samples are
    therefore returned unchanged, and a spike there survives filtering.

    Args:
        series: 1-D series without missing values
        kernel: Odd window size >= 1

    Returns:
        Filtered series of the same length
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ParameterError(f"median kernel must be odd and >= 1, got {kernel}", kernel=kernel)
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError(f"median_filter expects a 1-D series, got shape {x.shape}")
    if np.isnan(x).any():
        raise ParameterError("median_filter input contains missing values; interpolate first")
    n = x.size
    out = np.empty_like(x)
    for i in range(n):
        h = min(kernel // 2, i, n - 1 - i)
        out[i] = np.median(x[i - h:i + h + 1])
    return out


def interpolate_missing(series, channel: str = "series") -> np.ndarray:
    """
    Fill NaN gaps.

    Interior gaps are interpolated linearly between the nearest observed
    neighbors; leading and trailing gaps take the nearest observed value.

    Raises:
        MissingDataError: If nothing is observed, naming `channel`
    """
    x = np.asarray(series, dtype=np.float64)
    observed = ~np.isnan(x)
    if not observed.any():
        raise MissingDataError(channel)
    if observed.all():
        return x.copy()
    positions = np.arange(x.size)
    return np.interp(positions, positions[observed], x[observed])


def bust_height(joints: np.ndarray) -> float:
    return float(np.linalg.norm(joints[NECK] - joints[MID_HIP]))


def amplitude(joints, height: float = None, eps: float = FRAMING_EPS) -> float:
    """
    Wrist-to-wrist distance over bust height.

    Args:
        joints: (4, 2) positions in BODY_JOINTS order
        height: Bust height; computed from neck and mid-hip when omitted
        eps: Smallest usable height

    Raises:
        DegenerateFramingError: If the height is at most `eps`
    """
    joints = np.asarray(joints, dtype=np.float64)
    h = bust_height(joints) if height is None else float(height)
    if h <= eps:
        raise DegenerateFramingError(f"Bust height {h:.3g} is below {eps:g}", height=h)
    return float(np.linalg.norm(joints[LEFT_WRIST] - joints[RIGHT_WRIST]) / h)


def bounding_box_area(joints) -> float:
    """Area of the axis-aligned box around all four joints."""
    joints = np.asarray(joints, dtype=np.float64)
    width, height = joints.max(axis=0) - joints.min(axis=0)
    return float(width * height)


def valid_frames(track: KeypointTrack, threshold: float = JOINT_CONFIDENCE_THRESHOLD) -> np.ndarray:
    """Frames whose four joints are detected with enough confidence."""
    detected = ~np.isnan(track.positions).any(axis=2)
    confident = track.confidence >= threshold
    return (detected & confident).all(axis=1)


def silhouette_areas(track: KeypointTrack, threshold: float = JOINT_CONFIDENCE_THRESHOLD) -> np.ndarray:
    """Per-frame silhouette area; NaN on frames with missing joints."""
    areas = np.full(track.n_frames, np.nan)
    for t in np.flatnonzero(valid_frames(track, threshold)):
        areas[t] = bounding_box_area(track.positions[t])
    return areas


def quantity_of_motion(
    source: Union[KeypointTrack, np.ndarray],
    n: int = QOM_LAG_FRAMES,
) -> np.ndarray:
    """
    QoM(t) = Area(t + n) - Area(t).

    Args:
        source: Keypoint track, or a precomputed per-frame area series
        n: Lag in frames

    Returns:
        Series of the input length; the final n frames (and frames whose
        areas are missing) are NaN
    """
    if n <= 0:
        raise ParameterError(f"QoM lag must be positive, got {n}", n=n)
    areas = silhouette_areas(source) if isinstance(source, KeypointTrack) else np.asarray(source, dtype=np.float64)
    qom = np.full(areas.shape, np.nan)
    if areas.size > n:
        qom[:-n] = areas[n:] - areas[:-n]
    return qom


def body_features(
    track: KeypointTrack,
    n: int = QOM_LAG_FRAMES,
    threshold: float = JOINT_CONFIDENCE_THRESHOLD,
    eps: float = FRAMING_EPS,
) -> BodyFeatureTrack:
    """
    Raw amplitude and QoM per frame.

    Frames with low-confidence joints or a degenerate bust height are NaN.
    """
    amp = np.full(track.n_frames, np.nan)
    valid = valid_frames(track, threshold)
    degenerate = 0
    for t in np.flatnonzero(valid):
        try:
            amp[t] = amplitude(track.positions[t], eps=eps)
        except DegenerateFramingError:
            degenerate += 1
    if degenerate:
        logger.debug(f"{degenerate} frame(s) with degenerate framing marked missing")
    return BodyFeatureTrack(amplitude=amp, qom=quantity_of_motion(silhouette_areas(track, threshold), n))


def smooth_channels(frame: pd.DataFrame, kernel: int = MEDIAN_KERNEL) -> pd.DataFrame:
    """interpolate_missing then median_filter on every column."""
    return pd.DataFrame(
        {column: median_filter(interpolate_missing(frame[column].to_numpy(), column), kernel) for column in frame},
        columns=list(frame.columns),
    )


def preprocess_track(
    raw: Union[AUTrack, KeypointTrack, BodyFeatureTrack],
    kernel: int = MEDIAN_KERNEL,
    n: int = QOM_LAG_FRAMES,
) -> pd.DataFrame:
    """
    Clean feature matrix for one track.

    AU tracks keep the upper-face AU, gaze and head-pose channels; keypoint
    tracks are first turned into amplitude and QoM. Every channel is gap
    filled and median filtered.

    Returns:
        DataFrame of shape (T, C) with the channel names as columns

    Raises:
        MissingDataError: If a channel has no observed frame
    """
    if isinstance(raw, AUTrack):
        values = raw.values.copy()
        values[raw.missing] = np.nan
        frame = pd.DataFrame(values, columns=list(raw.channels))
    else:
        features = body_features(raw, n) if isinstance(raw, KeypointTrack) else raw
        frame = pd.DataFrame(features.to_matrix(), columns=BODY_CHANNELS)
    if frame.empty:
        raise MissingDataError(str(frame.columns[0]) if len(frame.columns) else "track")
    return smooth_channels(frame, kernel)
