"""
Fusion Models

Per-sample views of the fusion layer: docked embeddings, attention
probabilities, selection maps and the fused output.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Sequence

import numpy as np

from models.modality import ModalityId

COLUMN_SUM_TOLERANCE = 1e-6


class SelectionMode(str, Enum):
    SAMPLED = "sampled"
    ARGMAX = "argmax"


@dataclass
class DockedEmbedding:
    """An encoder output projected to the fusion dimension c."""

    modality: ModalityId
    vector: np.ndarray
    available: bool

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1:
            raise ValueError(f"docked vector must be 1-D, got shape {self.vector.shape}")
        if self.available and not np.isfinite(self.vector).all():
            raise ValueError(f"{self.modality.value}: docked vector has non-finite entries")
        if not self.available and np.any(self.vector != 0.0):
            raise ValueError(f"{self.modality.value}: unavailable modality must dock to zeros")


@dataclass
class AttentionMatrix:
    """
    Per-dimension modality probabilities.

    Attributes:
        p: (M, c) with p[m, d] the probability of taking dimension d from modality m
        available: (M,) availability after modality dropout
    """

    p: np.ndarray
    available: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        self.available = np.asarray(self.available, dtype=bool)
        if self.p.ndim != 2 or self.p.shape[0] != self.available.shape[0]:
            raise ValueError(f"p shape {self.p.shape} does not match mask {self.available.shape}")
        if (self.p < 0).any():
            raise ValueError("attention probabilities must be non-negative")
        if np.any(self.p[~self.available] != 0.0):
            raise ValueError("unavailable modalities must have probability exactly 0")
        if np.abs(self.p.sum(axis=0) - 1.0).max() > COLUMN_SUM_TOLERANCE:
            raise ValueError("attention columns must sum to 1")


@dataclass
class SelectionMap:
    """
    The modality chosen for every fusion dimension of one sample.

    Attributes:
        chosen: (c,) modality index per dimension
        mode: SAMPLED during training, ARGMAX at evaluation
        modalities: Modality ids indexed by `chosen`
    """

    chosen: np.ndarray
    mode: SelectionMode
    modalities: Sequence[ModalityId]
    sample_id: str = ""

    def __post_init__(self):
        self.chosen = np.asarray(self.chosen, dtype=np.int64)
        self.mode = SelectionMode(self.mode)
        self.modalities = tuple(ModalityId(m) for m in self.modalities)
        if self.chosen.ndim != 1:
            raise ValueError("chosen must be 1-D")
        if self.chosen.size and (self.chosen.min() < 0 or self.chosen.max() >= len(self.modalities)):
            raise ValueError("chosen indexes a modality outside the model's set")

    @property
    def dim(self) -> int:
        return int(self.chosen.shape[0])

    def counts(self) -> np.ndarray:
        return np.bincount(self.chosen, minlength=len(self.modalities))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "mode": self.mode.value,
            "modalities": [m.value for m in self.modalities],
            "chosen": self.chosen.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SelectionMap":
        return cls(
            chosen=np.asarray(data["chosen"], dtype=np.int64),
            mode=SelectionMode(data["mode"]),
            modalities=[ModalityId(m) for m in data["modalities"]],
            sample_id=data.get("sample_id", ""),
        )


@dataclass
class FusionOutput:
    """Fused vector, logits and the selection that produced them for one sample."""

    fused: np.ndarray
    logits: np.ndarray
    selection: SelectionMap
    attention: AttentionMatrix
    docked: List[DockedEmbedding]

    def __post_init__(self):
        rows = np.stack([d.vector for d in self.docked])
        expected = rows[self.selection.chosen, np.arange(self.selection.dim)]
        if not np.array_equal(expected, self.fused):
            raise ValueError("fused vector must equal the docked value of the chosen modality")
        available = self.attention.available
        if not available[self.selection.chosen].all():
            raise ValueError("selection chose an unavailable modality")
