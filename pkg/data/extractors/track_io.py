"""
Track File I/O

Readers and writers for the two raw track formats:

- `*.au.csv`: header `frame,timestamp,success,` followed by FACE_CHANNELS.
  Rows with success = 0 are tracker failures. Additional columns (for
  example lower-face AUs) are ignored on read.
- `*.pose.jsonl`: one JSON object per (frame, joint) with keys frame,
  joint, x, y, confidence. Joints absent from a frame are undetected.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from config.constants import AU_CSV_HEADER, BODY_JOINTS, FACE_CHANNELS
from models.tracks import AUTrack, KeypointTrack
from utils.errors import MissingDataError

logger = logging.getLogger(__name__)

POSE_FIELDS = ["frame", "joint", "x", "y", "confidence"]


def read_au_csv(path: Union[str, Path]) -> AUTrack:
    """
    Read an action-unit track.

    Raises:
        MissingDataError: If a documented channel column is absent
    """
    frame = pd.read_csv(path, comment="#")
    frame.columns = [c.strip() for c in frame.columns]
    for column in AU_CSV_HEADER:
        if column not in frame.columns:
            raise MissingDataError(column)
    frame = frame.sort_values("frame", kind="stable")
    missing = frame["success"].to_numpy() == 0
    values = frame[FACE_CHANNELS].to_numpy(dtype=np.float64)
    values[missing] = np.nan
    return AUTrack(values=values, missing=missing, timestamps=frame["timestamp"].to_numpy(dtype=np.float64))


def write_au_csv(
    path: Union[str, Path],
    track: AUTrack,
    extra_columns: Optional[Dict[str, np.ndarray]] = None,
) -> Path:
    """Write an AU track; `extra_columns` are appended after the documented header."""
    path = Path(path)
    frame = pd.DataFrame(np.nan_to_num(track.values, nan=0.0), columns=FACE_CHANNELS)
    frame.insert(0, "success", (~track.missing).astype(int))
    frame.insert(0, "timestamp", track.timestamps)
    frame.insert(0, "frame", np.arange(track.n_frames))
    for name, column in (extra_columns or {}).items():
        frame[name] = column
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path


def read_pose_jsonl(path: Union[str, Path], fps: float = 25.0) -> KeypointTrack:
    """
    Read a keypoint track.

    Frames run from 0 to the largest frame number seen; joints missing from
    a frame get NaN positions and zero confidence. Unknown joints are ignored.
    """
    with open(path, "r", encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    n_joints = len(BODY_JOINTS)
    if not records:
        return KeypointTrack(positions=np.zeros((0, n_joints, 2)), confidence=np.zeros((0, n_joints)), fps=fps)

    frame = pd.DataFrame.from_records(records, columns=POSE_FIELDS)
    n_frames = int(frame["frame"].max()) + 1
    frame = frame[frame["joint"].isin(BODY_JOINTS)]
    frames = pd.RangeIndex(n_frames, name="frame")

    def _pivot(column: str) -> np.ndarray:
        table = frame.pivot_table(index="frame", columns="joint", values=column, aggfunc="last")
        return table.reindex(index=frames, columns=list(BODY_JOINTS)).to_numpy(dtype=np.float64)

    positions = np.stack([_pivot("x"), _pivot("y")], axis=-1)
    confidence = np.nan_to_num(_pivot("confidence"), nan=0.0)
    dropped = len(records) - len(frame)
    if dropped:
        logger.debug(f"{Path(path).name}: ignored {dropped} record(s) for untracked joints")
    return KeypointTrack(positions=positions, confidence=confidence, fps=fps)


def write_pose_jsonl(path: Union[str, Path], track: KeypointTrack) -> Path:
    """Write a keypoint track; undetected joints (NaN) are omitted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for t in range(track.n_frames):
            for j, joint in enumerate(track.joints):
                x, y = track.positions[t, j]
                if np.isnan(x) or np.isnan(y):
                    continue
                record = {
                    "frame": t,
                    "joint": joint,
                    "x": round(float(x), 6),
                    "y": round(float(y), 6),
                    "confidence": round(float(track.confidence[t, j]), 4),
                }
                f.write(json.dumps(record) + "\n")
    return path
