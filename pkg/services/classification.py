"""
Classification Service

Applies a trained checkpoint to an indexed input bundle and explains each
prediction: class probabilities, the contribution profile of the fusion
selection, the top-contributing modality and the class each available
modality would predict on its own.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import LABEL_ORDER
from core.checkpoint import load_checkpoint
from core.classifier import BaseClassifier, MaleficClassifier
from data.ingestion.dataset import MultimodalDataset, restrict
from models.dataset import Batch, MultimodalSample
from models.modality import ModalityId
from utils.errors import ModalityMismatchError

logger = logging.getLogger(__name__)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def check_compatible(model_modalities: Iterable[ModalityId], input_modalities: Iterable[ModalityId]) -> None:
    """
    The checkpoint's modalities must all be declared by the input bundle.

    Raises:
        ModalityMismatchError: Listing both sets
    """
    expected = {ModalityId(m).value for m in model_modalities}
    provided = {ModalityId(m).value for m in input_modalities}
    if not expected <= provided:
        raise ModalityMismatchError(expected, provided)


class ClassificationService:
    """
    Eval-mode classification with structured explanations.
    """

    def __init__(self, model: BaseClassifier, metadata: Optional[Dict[str, Any]] = None, batch_size: int = 64):
        """
        Args:
            model: Trained classifier
            metadata: Checkpoint metadata (stamp, training details)
            batch_size: Inference batch size
        """
        self.model = model
        self.metadata = metadata or {}
        self.batch_size = batch_size
        self.model.eval()

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path], batch_size: int = 64) -> "ClassificationService":
        model, meta = load_checkpoint(path)
        return cls(model, meta, batch_size)

    @property
    def modalities(self) -> Tuple[ModalityId, ...]:
        return self.model.modalities

    def _records(self, samples: Sequence[MultimodalSample]) -> List[Dict[str, Any]]:
        batch = Batch.from_samples(samples)
        trace = self.model.predict(batch)
        probabilities = _softmax(trace.logits.data)
        names = [m.value for m in self.modalities]
        is_fusion = isinstance(self.model, MaleficClassifier)
        records = []
        for i, sample in enumerate(samples):
            p = probabilities[i]
            record: Dict[str, Any] = {
                "sentence_id": sample.sentence_id,
                "label": LABEL_ORDER[sample.label],
                "prediction": LABEL_ORDER[int(np.argmax(p))],
                "probabilities": {name: float(v) for name, v in zip(LABEL_ORDER, p)},
                "available": [m.value for m in self.modalities if m in sample.payloads],
                "contribution": None,
                "top_modality": None,
                "modality_predictions": None,
            }
            if is_fusion:
                counts = np.bincount(trace.chosen[i], minlength=len(names))
                shares = counts / trace.chosen.shape[1]
                record["contribution"] = {name: float(s) for name, s in zip(names, shares)}
                record["top_modality"] = names[int(np.argmax(counts))]
                record["modality_predictions"] = {
                    name: LABEL_ORDER[int(np.argmax(trace.modality_logits[i, j]))]
                    for j, name in enumerate(names) if trace.mask[i, j]
                }
            records.append(record)
        return records

    def classify(self, samples: Sequence[MultimodalSample]) -> List[Dict[str, Any]]:
        """
        One record per sample, in input order.

        Samples with none of the model's modalities get a record with
        `prediction` None and an `error` field.
        """
        restricted = restrict(samples, self.modalities)
        records: Dict[str, Dict[str, Any]] = {}
        usable = [s for s in restricted if self.model.accepts(s)]
        for start in range(0, len(usable), self.batch_size):
            for record in self._records(usable[start:start + self.batch_size]):
                records[record["sentence_id"]] = record
        skipped = 0
        out = []
        for sample in restricted:
            if sample.sentence_id in records:
                out.append(records[sample.sentence_id])
            else:
                skipped += 1
                out.append({
                    "sentence_id": sample.sentence_id,
                    "label": LABEL_ORDER[sample.label],
                    "prediction": None,
                    "error": "no_available_modality",
                })
        if skipped:
            logger.warning(f"{skipped} sentence(s) lack the model's required modalities")
        return out

    def classify_dataset(
        self,
        dataset: MultimodalDataset,
        sentence_ids: Optional[Iterable[str]] = None,
    ) -> List[Dict[str, Any]]:
        """
        Classify an indexed bundle.

        Raises:
            ModalityMismatchError: If the bundle does not declare every
                checkpoint modality
        """
        check_compatible(self.modalities, dataset.modalities)
        samples = dataset.samples
        if sentence_ids is not None:
            wanted = set(sentence_ids)
            samples = [s for s in samples if s.sentence_id in wanted]
        return self.classify(samples)


def write_records(records: Sequence[Dict[str, Any]], path: Union[str, Path]) -> Path:
    """Write prediction records as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    logger.info(f"Wrote {len(records)} prediction record(s) to {path}")
    return path
