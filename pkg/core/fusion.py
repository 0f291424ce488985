"""
MALEFIC Fusion Layer

Self-attention over the M docked modality vectors yields, for every fusion
dimension d, a probability p[m, d] of taking that dimension from modality m.
Training samples one modality per dimension; evaluation takes the argmax.
Unavailable and dropped modalities get probability exactly zero.

Gradients through the discrete choice use a straight-through estimator
(see `straight_through_select`).
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from config.constants import ATTENTION_KEY_DIM, MODALITY_DROPOUT_RATE
from core import ops
from core.autograd import Parameter, Value
from core.layers import Dense, Module
from models.fusion import AttentionMatrix, DockedEmbedding, FusionOutput, SelectionMap, SelectionMode
from models.modality import ModalityId
from utils.errors import FusionStateError, NoAvailableModalityError, ParameterError

logger = logging.getLogger(__name__)

N_CLASSES = 3


def _require_available(mask: np.ndarray) -> None:
    empty = np.flatnonzero(~mask.any(axis=-1))
    if empty.size:
        raise NoAvailableModalityError(
            f"{empty.size} sample(s) have no available modality",
            rows=empty.tolist(),
        )


def modality_dropout(mask: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """
    Independently drop each available modality with probability `rate`.

    A sample whose every available modality would drop keeps one survivor,
    chosen uniformly among its available modalities. Unavailable modalities
    never become available.

    Args:
        mask: (M,) or (B, M) availability
        rate: Drop probability in [0, 1]
        rng: Generator owned by the training run

    Returns:
        New mask of the same shape
    """
    if not 0.0 <= rate <= 1.0:
        raise ParameterError(f"modality dropout rate must lie in [0, 1], got {rate}", rate=rate)
    mask = np.asarray(mask, dtype=bool)
    rows = np.atleast_2d(mask)
    _require_available(rows)
    kept = rows & (rng.random(rows.shape) >= rate)
    for i in np.flatnonzero(~kept.any(axis=1)):
        kept[i, rng.choice(np.flatnonzero(rows[i]))] = True
    return kept.reshape(mask.shape)


def select_modalities(
    p: np.ndarray,
    mode: SelectionMode,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Choose one modality per fusion dimension.

    Args:
        p: (B, M, c) attention probabilities
        mode: SAMPLED draws from Categorical(p[:, :, d]); ARGMAX takes the
            most probable modality, ties going to the lowest index
        rng: Required in SAMPLED mode

    Returns:
        (B, c) chosen modality indices
    """
    mode = SelectionMode(mode)
    if mode == SelectionMode.ARGMAX:
        return np.argmax(p, axis=1)
    if rng is None:
        raise ParameterError("sampled selection needs a random generator")
    cdf = np.cumsum(p, axis=1)
    cdf = cdf / cdf[:, -1:, :]
    u = rng.random((p.shape[0], 1, p.shape[2]))
    return np.sum(cdf <= u, axis=1)


def straight_through_select(docked: Value, p: Value, chosen: np.ndarray) -> Value:
    """
    fused[b, d] = docked[b, chosen[b, d], d].

    Backward: the docked gradient flows only into the selected entries; the
    attention gradient treats the one-hot selection as if it were p, so
    d fused[b, d] / d p[b, m, d] = docked[b, m, d].
    """
    index = chosen[:, None, :]
    fused = np.take_along_axis(docked.data, index, axis=1)[:, 0, :]
    out = Value(fused, (docked, p), "select")
    one_hot = np.arange(docked.shape[1])[None, :, None] == index

    def _backward():
        g = out.grad[:, None, :]
        docked.grad += np.where(one_hot, g, 0.0)
        p.grad += docked.data * g

    out._backward = _backward
    return out


@dataclass
class ForwardTrace:
    """Graph handle of one forward pass; consumed by a single backward."""

    logits: Value
    consumed: bool = field(default=False, init=False)


@dataclass
class FusionTrace(ForwardTrace):
    """
    Batched fusion forward pass.

    Attributes:
        docked: (B, M, c)
        attention: (B, M, c) probabilities
        chosen: (B, c) selected modality indices
        fused: (B, c)
        mask: (B, M) availability after modality dropout
        modality_logits: (B, M, 3) head applied to each docked row
    """

    docked: Value = None
    attention: Value = None
    chosen: np.ndarray = None
    fused: Value = None
    mask: np.ndarray = None
    mode: SelectionMode = SelectionMode.ARGMAX
    modalities: Sequence[ModalityId] = ()
    sample_ids: Sequence[str] = ()
    modality_logits: Optional[np.ndarray] = None

    def selection_maps(self) -> List[SelectionMap]:
        return [
            SelectionMap(chosen=self.chosen[i], mode=self.mode, modalities=self.modalities,
                         sample_id=self.sample_ids[i] if self.sample_ids else "")
            for i in range(self.chosen.shape[0])
        ]

    def outputs(self) -> List[FusionOutput]:
        """Per-sample FusionOutput views of the batch."""
        maps = self.selection_maps()
        results = []
        for i, selection in enumerate(maps):
            docked = [
                DockedEmbedding(modality=m, vector=self.docked.data[i, j], available=bool(self.mask[i, j]))
                for j, m in enumerate(self.modalities)
            ]
            results.append(FusionOutput(
                fused=self.fused.data[i],
                logits=self.logits.data[i],
                selection=selection,
                attention=AttentionMatrix(p=self.attention.data[i], available=self.mask[i]),
                docked=docked,
            ))
        return results


def fusion_backward(trace: Optional[ForwardTrace], loss: Value) -> None:
    """
    Backpropagate `loss` through a retained forward trace.

    Raises:
        FusionStateError: If there is no trace or it was already consumed
    """
    if trace is None:
        raise FusionStateError("backward requested without a forward trace")
    if trace.consumed:
        raise FusionStateError("forward trace already consumed by a previous backward")
    loss.backward()
    trace.consumed = True


class MaleficFusion(Module):
    """
    Attention, per-dimension selection and linear head.

    Queries and keys are Dense(c, 16) maps of the docked rows, values are
    Dense(c, c). A zero-initialized per-(modality, dimension) bias is added to
    the attention output before the masked softmax over modalities.
    """

    def __init__(
        self,
        n_modalities: int,
        fusion_dim: int,
        rng: np.random.Generator,
        key_dim: int = ATTENTION_KEY_DIM,
        n_classes: int = N_CLASSES,
    ):
        self.n_modalities = n_modalities
        self.fusion_dim = fusion_dim
        self.key_dim = key_dim
        self.query = Dense(fusion_dim, key_dim, rng)
        self.key = Dense(fusion_dim, key_dim, rng)
        self.value = Dense(fusion_dim, fusion_dim, rng)
        self.modality_bias = Parameter(np.zeros((n_modalities, fusion_dim)))
        self.head = Dense(fusion_dim, n_classes, rng)

    def attention_parameters(self) -> List[Parameter]:
        return [*self.query.parameters(), *self.key.parameters(), *self.value.parameters(), self.modality_bias]

    def attend(self, docked: Value, mask: np.ndarray) -> Value:
        """
        Per-dimension modality probabilities.

        Args:
            docked: (B, M, c)
            mask: (B, M) availability

        Returns:
            (B, M, c) probabilities; columns sum to 1 over available rows
        """
        mask = np.asarray(mask, dtype=bool)
        _require_available(mask)
        # Stop-gradient copy: docked values receive gradient only through the
        # selected entries, attention parameters only through the straight-through path.
        rows = Value(docked.data if isinstance(docked, Value) else np.asarray(docked, dtype=float))
        q, k, v = self.query(rows), self.key(rows), self.value(rows)
        weights = ops.softmax(ops.scale(ops.matmul(q, ops.swap_last(k)), 1.0 / np.sqrt(self.key_dim)), axis=-1)
        scores = ops.add(ops.matmul(weights, v), self.modality_bias)
        return ops.softmax(scores, axis=1, mask=mask[:, :, None])

    def __call__(
        self,
        docked: Value,
        mask: np.ndarray,
        mode: SelectionMode,
        rng: Optional[np.random.Generator] = None,
        chosen: Optional[np.ndarray] = None,
    ) -> FusionTrace:
        """
        Attend, select and classify.

        Args:
            docked: (B, M, c) docked embeddings, zero rows where unavailable
            mask: (B, M) availability (after modality dropout)
            mode: SAMPLED or ARGMAX
            rng: Generator for SAMPLED mode
            chosen: Optional (B, c) frozen selection, bypassing sampling

        Returns:
            FusionTrace with logits and the selection that produced them
        """
        mask = np.asarray(mask, dtype=bool)
        attention = self.attend(docked, mask)
        if chosen is None:
            chosen = select_modalities(attention.data, mode, rng)
        fused = straight_through_select(docked, attention, chosen)
        logits = self.head(fused)
        return FusionTrace(
            logits=logits,
            docked=docked,
            attention=attention,
            chosen=chosen,
            fused=fused,
            mask=mask,
            mode=SelectionMode(mode),
        )

    def modality_predictions(self, docked: np.ndarray) -> np.ndarray:
        """Head applied to every docked row alone: (B, M, c) -> (B, M, 3)."""
        return docked @ self.head.weight.data + self.head.bias.data


def attend(fusion: MaleficFusion, docked: Value, mask: np.ndarray) -> Value:
    return fusion.attend(docked, mask)


def select_and_fuse(
    fusion: MaleficFusion,
    docked: Value,
    attention: Value,
    mode: SelectionMode,
    rng: Optional[np.random.Generator] = None,
) -> FusionTrace:
    """Select from precomputed attention and classify the fused vector."""
    chosen = select_modalities(attention.data, mode, rng)
    fused = straight_through_select(docked, attention, chosen)
    mask = attention.data.sum(axis=2) > 0
    return FusionTrace(
        logits=fusion.head(fused), docked=docked, attention=attention,
        chosen=chosen, fused=fused, mask=mask, mode=SelectionMode(mode),
    )
