"""
Multimodal Dataset

Loads the payloads referenced by a dataset index into MultimodalSamples.
Embedding modalities are read from `*.emb.f32` files (context modalities
average their listed sentence embeddings); face and body are read from
`*.feat.csv` feature matrices.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from data.ingestion.embeddings import read_embedding
from models.dataset import Batch, DatasetEntry, DatasetIndex, MultimodalSample
from models.modality import ModalityId, ordered_modalities
from utils.sampling import session_split
from utils.stamping import read_csv

logger = logging.getLogger(__name__)


class MultimodalDataset:
    """
    In-memory view of an indexed dataset.

    Samples are loaded once, in index order.
    """

    def __init__(self, index: DatasetIndex):
        self.index = index
        self.root = Path(index.root)
        self._samples: Optional[List[MultimodalSample]] = None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MultimodalDataset":
        return cls(DatasetIndex.load(path))

    def __len__(self) -> int:
        return len(self.index)

    @property
    def modalities(self) -> Tuple[ModalityId, ...]:
        return self.index.modalities

    def load_payload(self, entry: DatasetEntry, modality: ModalityId) -> np.ndarray:
        """Feature array of one modality of one entry."""
        paths = [self.root / p for p in entry.paths[modality.value]]
        if modality.is_sequence:
            return read_csv(paths[0]).to_numpy(dtype=np.float64)
        vectors = [read_embedding(p) for p in paths]
        return np.mean(vectors, axis=0)

    def load_sample(self, entry: DatasetEntry) -> MultimodalSample:
        payloads = {
            m: self.load_payload(entry, m) for m in self.modalities if entry.available(m)
        }
        return MultimodalSample(
            sentence_id=entry.sentence_id,
            session_id=entry.session_id,
            label=entry.label.index,
            payloads=payloads,
        )

    @property
    def samples(self) -> List[MultimodalSample]:
        if self._samples is None:
            self._samples = [self.load_sample(e) for e in self.index.entries]
            logger.info(f"Loaded {len(self._samples)} samples from {self.root}")
        return self._samples

    def input_dims(self) -> Dict[str, int]:
        """Input size per modality: embedding size or channel count."""
        dims: Dict[str, int] = {}
        for sample in self.samples:
            for modality, payload in sample.payloads.items():
                dims.setdefault(modality.value, int(payload.shape[-1]))
        return dims

    def sessions(self) -> List[str]:
        return self.index.sessions()

    def by_sessions(self, sessions: Iterable[str]) -> List[MultimodalSample]:
        wanted = set(sessions)
        return [s for s in self.samples if s.session_id in wanted]

    def split(
        self,
        rng: np.random.Generator,
        val_fraction: float = 0.2,
    ) -> Tuple[List[MultimodalSample], List[MultimodalSample], List[str]]:
        """
        Session-level train/validation split.

        Returns:
            (train samples, validation samples, validation session ids)
        """
        train_sessions, val_sessions = session_split(self.sessions(), rng, val_fraction)
        return self.by_sessions(train_sessions), self.by_sessions(val_sessions), val_sessions


def restrict(
    samples: Sequence[MultimodalSample],
    modalities: Iterable[Union[str, ModalityId]],
) -> List[MultimodalSample]:
    """Drop every payload outside `modalities` from the samples."""
    keep = set(ordered_modalities(modalities))
    return [s.without([m for m in s.payloads if m not in keep]) for s in samples]


def iter_batches(samples: Sequence[MultimodalSample], batch_size: int) -> Iterator[Batch]:
    """Consecutive batches in sample order."""
    for start in range(0, len(samples), batch_size):
        yield Batch.from_samples(samples[start:start + batch_size])


def full_modality_samples(
    samples: Sequence[MultimodalSample],
    modalities: Iterable[ModalityId],
) -> List[MultimodalSample]:
    modalities = tuple(modalities)
    return [s for s in samples if s.has_all(modalities)]
