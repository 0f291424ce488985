"""
Model Checkpoints

A checkpoint is a key-sorted JSON document holding the model config, the
modality ordering, the run stamp and every named parameter tensor. Tensors
are stored as base64 of their little-endian float64 bytes with their shape,
so a save/load round trip is bit-exact.
"""

import base64
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from config.schemas import ModelConfig
from core.classifier import BaseClassifier, build_model
from utils.errors import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "malefic-checkpoint"
CHECKPOINT_VERSION = 1
BYTE_ORDER = "little"
DTYPE = "<f8"


def encode_tensor(array: np.ndarray) -> Dict[str, Any]:
    data = np.ascontiguousarray(array, dtype=DTYPE)
    return {"shape": list(data.shape), "data": base64.b64encode(data.tobytes()).decode("ascii")}


def decode_tensor(payload: Dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(payload["data"])
    return np.frombuffer(raw, dtype=DTYPE).astype(np.float64).reshape(payload["shape"])


def save_checkpoint(
    path: Union[str, Path],
    model: BaseClassifier,
    stamp: Optional[Dict[str, Any]] = None,
    validation_sessions: Optional[List[str]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a model checkpoint.

    Args:
        path: Output file
        model: Classifier to save
        stamp: Run stamp (config hash, seed)
        validation_sessions: Sessions held out during training
        extra: Additional metadata (best epoch, metrics)

    Returns:
        The written path
    """
    path = Path(path)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "byte_order": BYTE_ORDER,
        "dtype": "float64",
        "model_config": model.config.model_dump(mode="json"),
        "modalities": [m.value for m in model.modalities],
        "modality_dropout_rate": getattr(model, "modality_dropout_rate", 0.0),
        "stamp": stamp or {},
        "validation_sessions": list(validation_sessions or []),
        "metadata": extra or {},
        "parameters": {name: encode_tensor(data) for name, data in model.state_dict().items()},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[BaseClassifier, Dict[str, Any]]:
    """
    Rebuild a model from a checkpoint.

    Returns:
        (model in eval mode, checkpoint metadata without the tensors)

    Raises:
        CheckpointError: If the file is missing, malformed or inconsistent
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}", path=str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint {path} is not valid JSON: {e}", path=str(path)) from e
    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("byte_order") != BYTE_ORDER:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} file", path=str(path))

    config = ModelConfig.model_validate(payload["model_config"])
    # Parameters are overwritten below; the init generator only fixes shapes.
    model = build_model(config, np.random.default_rng(0), payload.get("modality_dropout_rate", 0.0))
    model.load_state_dict({name: decode_tensor(t) for name, t in payload["parameters"].items()})
    model.eval()
    meta = {k: v for k, v in payload.items() if k != "parameters"}
    return model, meta
