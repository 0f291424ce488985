"""
Artifact Stamping

Every artifact written by a run carries the hash of the effective
configuration and the seed. Outputs are timestamp-free so that equal
config and seed give byte-identical files.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: Dict[str, Any]) -> str:
    """Short SHA-256 of the canonical JSON form of a config."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def file_hash(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class Stamp:
    config_hash: str
    seed: int

    @classmethod
    def for_config(cls, config: Dict[str, Any], seed: int) -> "Stamp":
        return cls(config_hash=config_hash(config), seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {"config_hash": self.config_hash, "seed": self.seed}

    def header(self) -> str:
        return f"# config_hash={self.config_hash} seed={self.seed}\n"


def write_json(path: Union[str, Path], payload: Dict[str, Any], stamp: Stamp = None) -> Path:
    """
    Write a stamped, key-sorted JSON artifact.

    Args:
        path: Output file
        payload: JSON-serializable dictionary
        stamp: Optional run stamp stored under "stamp"

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(payload)
    if stamp is not None:
        data["stamp"] = stamp.to_dict()
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(path: Union[str, Path], frame: pd.DataFrame, stamp: Stamp = None, index: bool = False) -> Path:
    """Write a CSV artifact, preceded by a `#` stamp line when a stamp is given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if stamp is not None:
            handle.write(stamp.header())
        frame.to_csv(handle, index=index, float_format="%.10g", lineterminator="\n")
    return path


def read_csv(path: Union[str, Path], **kwargs: Any) -> pd.DataFrame:
    """Read a CSV artifact, skipping stamp lines."""
    return pd.read_csv(path, comment="#", **kwargs)
