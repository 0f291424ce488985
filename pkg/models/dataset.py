"""
Dataset Models

The dataset index written by preprocessing, loaded samples, and the
mini-batches fed to the classifiers.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import MODALITY_ORDER
from models.modality import ALL_MODALITIES, MiscLabel, ModalityId, ordered_modalities

INDEX_FORMAT_VERSION = 1


@dataclass
class DatasetEntry:
    """
    One client sentence in the dataset index.

    Attributes:
        sentence_id: "<session>-<k:04d>"
        session_id: Session the sentence belongs to
        label: Resolved MISC label
        turn_id: Turn index within the session
        position_in_turn: Sentence index within the turn
        paths: Feature files per modality, relative to the index directory;
            context modalities list every sentence they average over
    """

    sentence_id: str
    session_id: str
    label: MiscLabel
    turn_id: int
    position_in_turn: int
    paths: Dict[str, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.label = MiscLabel(self.label)
        unknown = set(self.paths) - set(MODALITY_ORDER)
        if unknown:
            raise ValueError(f"{self.sentence_id}: unknown modalities {sorted(unknown)}")

    def available(self, modality: Union[str, ModalityId]) -> bool:
        return bool(self.paths.get(ModalityId(modality).value))

    @property
    def mask(self) -> Dict[str, bool]:
        return {name: self.available(name) for name in MODALITY_ORDER}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "session_id": self.session_id,
            "label": self.label.value,
            "turn_id": self.turn_id,
            "position_in_turn": self.position_in_turn,
            "mask": self.mask,
            "paths": {k: list(v) for k, v in self.paths.items() if v},
        }

    @classmethod
    def from_dict(cls, sentence_id: str, data: Dict[str, Any]) -> "DatasetEntry":
        return cls(
            sentence_id=sentence_id,
            session_id=data["session_id"],
            label=MiscLabel(data["label"]),
            turn_id=int(data["turn_id"]),
            position_in_turn=int(data["position_in_turn"]),
            paths={k: list(v) for k, v in data.get("paths", {}).items()},
        )


@dataclass
class DatasetIndex:
    """
    Aligned multimodal dataset index (`index.json`).

    Attributes:
        entries: Client sentences in session/reading order
        modalities: Modalities the source manifests declared
        root: Directory the relative paths resolve against
    """

    entries: List[DatasetEntry]
    modalities: Tuple[ModalityId, ...] = ALL_MODALITIES
    root: Path = Path(".")

    def __post_init__(self):
        self.modalities = ordered_modalities(self.modalities)
        ids = [e.sentence_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("sentence ids in a dataset index must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def mask_matrix(self) -> np.ndarray:
        """Availability as a (N, 6) boolean matrix in MODALITY_ORDER."""
        return np.array(
            [[e.available(m) for m in MODALITY_ORDER] for e in self.entries], dtype=bool
        ).reshape(len(self.entries), len(MODALITY_ORDER))

    def labels(self) -> np.ndarray:
        return np.array([e.label.index for e in self.entries], dtype=np.int64)

    def sessions(self) -> List[str]:
        return sorted({e.session_id for e in self.entries})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": INDEX_FORMAT_VERSION,
            "modalities": [m.value for m in self.modalities],
            "entries": {e.sentence_id: e.to_dict() for e in self.entries},
        }

    def save(self, path: Union[str, Path], stamp: Optional[Dict[str, Any]] = None) -> Path:
        path = Path(path)
        payload = self.to_dict()
        if stamp:
            payload["stamp"] = stamp
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DatasetIndex":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        entries = [DatasetEntry.from_dict(sid, raw) for sid, raw in sorted(data["entries"].items())]
        return cls(entries=entries, modalities=data["modalities"], root=path.parent)


@dataclass
class MultimodalSample:
    """
    One client sentence with its loaded feature payloads.

    Attributes:
        payloads: Feature arrays for available modalities only; embeddings are
            (d,), face/body tracks are (T, C)
        mask: (6,) availability in MODALITY_ORDER
    """

    sentence_id: str
    session_id: str
    label: int
    payloads: Dict[ModalityId, np.ndarray]
    mask: np.ndarray = field(init=False)

    def __post_init__(self):
        self.payloads = {ModalityId(k): np.asarray(v, dtype=np.float64) for k, v in self.payloads.items()}
        self.mask = np.array([m in self.payloads for m in ALL_MODALITIES], dtype=bool)
        if not 0 <= int(self.label) < 3:
            raise ValueError(f"{self.sentence_id}: label index {self.label} out of range")
        for modality, payload in self.payloads.items():
            if not np.isfinite(payload).all():
                raise ValueError(f"{self.sentence_id}: non-finite {modality.value} payload")

    def has_all(self, modalities: Iterable[ModalityId]) -> bool:
        return all(m in self.payloads for m in modalities)

    def without(self, modalities: Iterable[Union[str, ModalityId]]) -> "MultimodalSample":
        """Copy of the sample with the given modalities removed."""
        dropped = {ModalityId(m) for m in modalities}
        return MultimodalSample(
            sentence_id=self.sentence_id,
            session_id=self.session_id,
            label=self.label,
            payloads={m: p for m, p in self.payloads.items() if m not in dropped},
        )


@dataclass
class Batch:
    """
    A mini-batch; payload lists hold None where a modality is unavailable.

    Attributes:
        mask: (B, 6) availability in MODALITY_ORDER
        labels: (B,) label indices
    """

    sentence_ids: List[str]
    labels: np.ndarray
    mask: np.ndarray
    payloads: Dict[ModalityId, List[Optional[np.ndarray]]]

    @classmethod
    def from_samples(cls, samples: Sequence[MultimodalSample]) -> "Batch":
        if not samples:
            raise ValueError("cannot build an empty batch")
        return cls(
            sentence_ids=[s.sentence_id for s in samples],
            labels=np.array([s.label for s in samples], dtype=np.int64),
            mask=np.stack([s.mask for s in samples]),
            payloads={m: [s.payloads.get(m) for s in samples] for m in ALL_MODALITIES},
        )

    def __len__(self) -> int:
        return len(self.sentence_ids)

    def column(self, modality: ModalityId) -> np.ndarray:
        return self.mask[:, modality.index]
