"""
Embedding Files

Precomputed sentence embeddings are stored as raw little-endian float32
(`*.emb.f32`) with a JSON sidecar (`*.emb.json`) recording the dimension and
the sentence id. They are read back as float64.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from config.constants import EMBEDDING_SIDECAR_SUFFIX, EMBEDDING_SUFFIX
from utils.errors import ShapeError

logger = logging.getLogger(__name__)

EMBEDDING_DTYPE = "<f4"


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name[: -len(EMBEDDING_SUFFIX)] + EMBEDDING_SIDECAR_SUFFIX)


def write_embedding(path: Union[str, Path], vector: np.ndarray, sentence_id: str) -> Path:
    """
    Write one embedding and its sidecar.

    Args:
        path: Target `*.emb.f32` file
        vector: 1-D embedding
        sentence_id: Sentence the embedding belongs to

    Returns:
        The written embedding path
    """
    path = Path(path)
    if not path.name.endswith(EMBEDDING_SUFFIX):
        raise ValueError(f"Embedding files must end with {EMBEDDING_SUFFIX}: {path}")
    vector = np.asarray(vector)
    if vector.ndim != 1:
        raise ShapeError("write_embedding", vector.shape)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(vector.astype(EMBEDDING_DTYPE).tobytes())
    sidecar = {"dim": int(vector.size), "sentence_id": sentence_id, "dtype": "float32", "byte_order": "little"}
    sidecar_path(path).write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_embedding(path: Union[str, Path], expected_dim: Optional[int] = None) -> np.ndarray:
    """
    Read an embedding as float64.

    Raises:
        ShapeError: If the stored size disagrees with the sidecar or with
            `expected_dim`
    """
    path = Path(path)
    vector = np.frombuffer(path.read_bytes(), dtype=EMBEDDING_DTYPE).astype(np.float64)
    sidecar = sidecar_path(path)
    if sidecar.exists():
        dim = json.loads(sidecar.read_text(encoding="utf-8"))["dim"]
        if dim != vector.size:
            raise ShapeError(f"read_embedding({path.name})", (dim,), vector.shape)
    if expected_dim is not None and vector.size != expected_dim:
        raise ShapeError(f"read_embedding({path.name})", (expected_dim,), vector.shape)
    return vector


def embedding_dim(path: Union[str, Path]) -> int:
    """Dimension from the sidecar, falling back to the file size."""
    sidecar = sidecar_path(path)
    if sidecar.exists():
        return int(json.loads(sidecar.read_text(encoding="utf-8"))["dim"])
    return Path(path).stat().st_size // np.dtype(EMBEDDING_DTYPE).itemsize
