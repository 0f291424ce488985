"""
Classifiers

`MaleficClassifier` is the fusion model. `UnimodalClassifier` (one encoder and
a linear head) and `ConcatClassifier` (encoder outputs concatenated into a
linear head) are the single-modality and linear text+context baselines.
All three share the training interface used by the trainer.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.constants import MODALITY_DROPOUT_RATE
from config.schemas import ModelConfig
from core import ops
from core.autograd import Value
from core.encoders import ModalityBranch, build_encoder
from core.fusion import ForwardTrace, FusionTrace, MaleficFusion, N_CLASSES, fusion_backward, modality_dropout
from core.layers import Dense, Module
from models.dataset import Batch, MultimodalSample
from models.fusion import SelectionMode
from models.modality import ModalityId

logger = logging.getLogger(__name__)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class BaseClassifier(Module):
    """Shared training/inference interface."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.modalities: Tuple[ModalityId, ...] = tuple(config.modalities)

    def availability(self, batch: Batch) -> np.ndarray:
        """(B, M) availability restricted to this model's modalities."""
        return batch.mask[:, [m.index for m in self.modalities]]

    def accepts(self, sample: MultimodalSample) -> bool:
        """Whether the model can be trained and evaluated on the sample."""
        return any(m in sample.payloads for m in self.modalities)

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None, **kwargs) -> ForwardTrace:
        raise NotImplementedError

    def training_loss(self, batch: Batch, rng: np.random.Generator) -> Tuple[Value, ForwardTrace]:
        """Cross-entropy of a training-mode forward pass."""
        self.train()
        trace = self.forward(batch, rng)
        return ops.cross_entropy(trace.logits, batch.labels), trace

    def backward(self, loss: Value, trace: ForwardTrace) -> None:
        fusion_backward(trace, loss)

    def predict(self, batch: Batch) -> ForwardTrace:
        self.eval()
        return self.forward(batch, None)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        return _softmax(self.predict(batch).logits.data)


class MaleficClassifier(BaseClassifier):
    """Per-modality branches feeding the MALEFIC fusion layer."""

    def __init__(
        self,
        config: ModelConfig,
        rng: np.random.Generator,
        modality_dropout_rate: float = MODALITY_DROPOUT_RATE,
    ):
        super().__init__(config)
        self.modality_dropout_rate = modality_dropout_rate
        self.branches: Dict[str, ModalityBranch] = {
            m.value: ModalityBranch(config.encoders[m.value], config.fusion_dim, rng) for m in self.modalities
        }
        self.fusion = MaleficFusion(len(self.modalities), config.fusion_dim, rng, key_dim=config.key_dim)

    def encode(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Dict[str, Value]:
        """Encoder outputs per modality, (B, out) each."""
        return {m.value: self.branches[m.value].encode(batch.payloads[m], rng) for m in self.modalities}

    def dock_all(self, encoded: Dict[str, Value], mask: np.ndarray) -> Value:
        """Stack docked embeddings into (B, M, c)."""
        rows = [self.branches[m.value].project(encoded[m.value], mask[:, j]) for j, m in enumerate(self.modalities)]
        return ops.stack(rows, axis=1)

    def forward(
        self,
        batch: Batch,
        rng: Optional[np.random.Generator] = None,
        mode: Optional[SelectionMode] = None,
        chosen: Optional[np.ndarray] = None,
    ) -> FusionTrace:
        """
        Args:
            batch: Input batch
            rng: Run generator; drives dropout and sampling in training mode
            mode: Selection mode; defaults to SAMPLED in training, ARGMAX in eval
            chosen: Optional frozen (B, c) selection

        Returns:
            FusionTrace for the batch
        """
        mask = self.availability(batch)
        if self.training:
            mask = modality_dropout(mask, self.modality_dropout_rate, rng)
        mode = mode or (SelectionMode.SAMPLED if self.training else SelectionMode.ARGMAX)
        encoded = self.encode(batch, rng if self.training else None)
        docked = self.dock_all(encoded, mask)
        trace = self.fusion(docked, mask, mode, rng, chosen=chosen)
        trace.modalities = self.modalities
        trace.sample_ids = list(batch.sentence_ids)
        trace.modality_logits = self.fusion.modality_predictions(docked.data)
        return trace


class UnimodalClassifier(BaseClassifier):
    """One encoder and a linear classifier."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, **_):
        super().__init__(config)
        spec = config.encoders[self.modalities[0].value]
        self.encoder = build_encoder(spec, rng)
        self.head = Dense(spec.output_dim, N_CLASSES, rng)

    def accepts(self, sample: MultimodalSample) -> bool:
        return self.modalities[0] in sample.payloads

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None, **_) -> ForwardTrace:
        modality = self.modalities[0]
        encoded = self.encoder.encode_batch(batch.payloads[modality], rng if self.training else None)
        return ForwardTrace(logits=self.head(encoded))


class ConcatClassifier(BaseClassifier):
    """Encoder outputs concatenated (zeros when absent) into a linear classifier."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, **_):
        super().__init__(config)
        self.encoders = {m.value: build_encoder(config.encoders[m.value], rng) for m in self.modalities}
        width = sum(config.encoders[m.value].output_dim for m in self.modalities)
        self.head = Dense(width, N_CLASSES, rng)

    def accepts(self, sample: MultimodalSample) -> bool:
        return self.modalities[0] in sample.payloads

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None, **_) -> ForwardTrace:
        mask = self.availability(batch)
        parts: List[Value] = []
        for j, m in enumerate(self.modalities):
            encoded = self.encoders[m.value].encode_batch(batch.payloads[m], rng if self.training else None)
            parts.append(ops.where_mask(encoded, mask[:, j][:, None]))
        return ForwardTrace(logits=self.head(ops.concat(parts, axis=-1)))


MODEL_CLASSES = {
    "malefic": MaleficClassifier,
    "unimodal": UnimodalClassifier,
    "concat": ConcatClassifier,
}


def build_model(
    config: ModelConfig,
    rng: np.random.Generator,
    modality_dropout_rate: float = MODALITY_DROPOUT_RATE,
) -> BaseClassifier:
    """Instantiate the classifier described by `config`."""
    model = MODEL_CLASSES[config.kind](config, rng, modality_dropout_rate=modality_dropout_rate)
    logger.info(
        f"Built {config.kind} model over {[m.value for m in config.modalities]} "
        f"({model.num_parameters()} parameters)"
    )
    return model
