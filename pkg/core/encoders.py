"""
Modality Encoders

Embedding modalities (text, contexts, audio) go through two dense layers with
a skip connection; face and body sequences go through a convolution stack, a
single self-attention block and mean pooling. A docking layer then projects
every encoder output to the shared fusion dimension.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from config.constants import LEAKY_RELU_SLOPE
from config.schemas import EncoderSpec
from core import ops
from core.autograd import Value
from core.layers import Conv1d, Dense, LayerNorm, Module
from models.fusion import DockedEmbedding
from models.modality import ModalityId
from utils.errors import ShapeError

logger = logging.getLogger(__name__)


class EmbeddingEncoder(Module):
    """
    Two dense layers with leaky ReLU and dropout; the first layer's
    activation is added to the second layer's output.
    """

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator):
        self.spec = spec
        self.fc1 = Dense(spec.input_dim, spec.hidden_dim, rng)
        self.fc2 = Dense(spec.hidden_dim, spec.output_dim, rng)

    @property
    def output_dim(self) -> int:
        return self.spec.output_dim

    def __call__(self, x, rng: Optional[np.random.Generator] = None) -> Value:
        """
        Args:
            x: (d,) or (B, d) precomputed embeddings
            rng: Generator for dropout in training mode

        Returns:
            (output_dim,) or (B, output_dim)
        """
        x = ops.as_value(x)
        if x.shape[-1] != self.spec.input_dim:
            raise ShapeError(f"{self.spec.modality.value}_encoder", x.shape, (self.spec.input_dim,))
        h1 = ops.dropout(ops.leaky_relu(self.fc1(x), LEAKY_RELU_SLOPE), self.spec.dropout, rng, self.training)
        h2 = ops.dropout(ops.leaky_relu(self.fc2(h1), LEAKY_RELU_SLOPE), self.spec.dropout, rng, self.training)
        if self.spec.hidden_dim == self.spec.output_dim:
            return ops.add(h2, h1)
        return h2

    def encode_batch(self, payloads: Sequence[Optional[np.ndarray]], rng=None) -> Value:
        """Encode a batch; unavailable rows are fed zeros and masked by docking."""
        rows = [p if p is not None else np.zeros(self.spec.input_dim) for p in payloads]
        return self(np.stack(rows), rng)


def text_encoder(embedding, encoder: EmbeddingEncoder, rng: Optional[np.random.Generator] = None) -> Value:
    """Encode one sentence embedding; output has encoder.output_dim (30 by default) entries."""
    return encoder(embedding, rng)


class SequenceEncoder(Module):
    """
    Conv(16) -> leaky ReLU -> Conv(16) -> leaky ReLU -> + positional encoding
    -> self-attention block (residual + layer norm) -> mean pool -> dense.
    """

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator):
        self.spec = spec
        filters = spec.hidden_dim
        self.conv1 = Conv1d(spec.input_dim, filters, spec.conv_width, rng)
        self.conv2 = Conv1d(filters, filters, spec.conv_width, rng)
        self.query = Dense(filters, spec.key_dim, rng)
        self.key = Dense(filters, spec.key_dim, rng)
        self.value = Dense(filters, filters, rng)
        self.attn_out = Dense(filters, filters, rng)
        self.norm = LayerNorm(filters)
        self.proj = Dense(filters, spec.output_dim, rng)

    @property
    def output_dim(self) -> int:
        return self.spec.output_dim

    def __call__(self, features, rng: Optional[np.random.Generator] = None) -> Value:
        """
        Args:
            features: (T, C) preprocessed feature matrix, T >= 1

        Returns:
            (output_dim,) sequence embedding
        """
        x = ops.as_value(features)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ShapeError(f"{self.spec.modality.value}_encoder", x.shape)
        if x.shape[1] != self.spec.input_dim:
            raise ShapeError(f"{self.spec.modality.value}_encoder", x.shape, (x.shape[0], self.spec.input_dim))
        T = x.shape[0]
        h = ops.leaky_relu(self.conv1(x))
        h = ops.leaky_relu(self.conv2(h))
        h = ops.add(h, ops.positional_encoding(T, self.spec.hidden_dim))

        q, k, v = self.query(h), self.key(h), self.value(h)
        scores = ops.scale(ops.matmul(q, ops.swap_last(k)), 1.0 / np.sqrt(self.spec.key_dim))
        context = ops.matmul(ops.softmax(scores, axis=-1), v)
        attended = ops.dropout(self.attn_out(context), self.spec.dropout, rng, self.training)
        h = self.norm(ops.add(h, attended))

        return self.proj(ops.mean_pool(h, axis=0))

    def encode_batch(self, payloads: Sequence[Optional[np.ndarray]], rng=None) -> Value:
        rows: List[Value] = []
        for payload in payloads:
            if payload is None:
                rows.append(Value(np.zeros(self.spec.output_dim)))
            else:
                rows.append(self(payload, rng))
        return ops.stack(rows, axis=0)


def sequence_encoder(features, encoder: SequenceEncoder, rng: Optional[np.random.Generator] = None) -> Value:
    return encoder(features, rng)


def build_encoder(spec: EncoderSpec, rng: np.random.Generator) -> Module:
    if spec.is_sequence:
        return SequenceEncoder(spec, rng)
    return EmbeddingEncoder(spec, rng)


class ModalityBranch(Module):
    """Encoder plus docking layer for one modality."""

    def __init__(self, spec: EncoderSpec, fusion_dim: int, rng: np.random.Generator):
        self.modality = spec.modality
        self.encoder = build_encoder(spec, rng)
        self.dock_layer = Dense(spec.output_dim, fusion_dim, rng)

    def encode(self, payloads: Sequence[Optional[np.ndarray]], rng=None) -> Value:
        return self.encoder.encode_batch(payloads, rng)

    def project(self, encoded: Value, available: np.ndarray) -> Value:
        """(B, out) -> (B, c); rows of unavailable samples are exactly zero."""
        return ops.where_mask(self.dock_layer(encoded), np.asarray(available, dtype=bool)[:, None])

    def __call__(self, payloads: Sequence[Optional[np.ndarray]], available: np.ndarray, rng=None) -> Value:
        return self.project(self.encode(payloads, rng), available)

    def dock(self, payload: Optional[np.ndarray], available: bool = True) -> DockedEmbedding:
        """Docked embedding of a single sample."""
        available = bool(available and payload is not None)
        docked = self([payload if available else None], np.array([available]))
        return DockedEmbedding(modality=self.modality, vector=docked.data[0], available=available)


def dock(embedding, modality: ModalityId, branch: ModalityBranch, available: bool = True) -> DockedEmbedding:
    """Project an encoder output to the fusion dimension; zero vector when unavailable."""
    if not available:
        return DockedEmbedding(
            modality=modality, vector=np.zeros(branch.dock_layer.out_dim), available=False
        )
    vector = branch.dock_layer(embedding).data
    return DockedEmbedding(modality=modality, vector=vector, available=True)
