"""
Typed Configuration Models

Pydantic models for every configurable part of a run. They are built from
presets (config/presets.py), CLI flags and TOML config files.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.constants import (
    ADAMW_BETAS,
    ADAMW_EPS,
    ADAMW_WEIGHT_DECAY,
    ATTENTION_KEY_DIM,
    BODY_EMBEDDING_DIM,
    BOOTSTRAP_SAMPLES,
    CLUSTER_K_RANGE,
    CLUSTER_RESTARTS,
    CONFIDENCE_LEVEL,
    CONV_FILTERS,
    CONV_WIDTH,
    DEFAULT_FUSION_DIM,
    ENCODER_DROPOUT,
    FACE_EMBEDDING_DIM,
    LABEL_ORDER,
    MODALITY_DROPOUT_RATE,
    REFERENCE_AVAILABILITY,
    REFERENCE_CLASS_PROPORTIONS,
    QOM_LAG_FRAMES,
    TEXT_HIDDEN_DIM,
    VALIDATION_FRACTION,
)
from models.modality import ModalityId, ordered_modalities

RAW_MODALITIES = ("text", "audio", "face", "body")
ModelKind = Literal["malefic", "unimodal", "concat"]


class EncoderSpec(BaseModel):
    """
    Shape of one modality encoder.

    For embedding modalities `input_dim` is the embedding size and
    `hidden_dim` the width of both dense layers; for face/body it is the
    channel count and `hidden_dim` the convolution filter count.
    """

    model_config = ConfigDict(frozen=True)

    modality: ModalityId
    input_dim: int = Field(gt=0)
    hidden_dim: int = Field(gt=0)
    output_dim: int = Field(gt=0)
    key_dim: int = Field(default=ATTENTION_KEY_DIM, gt=0)
    conv_width: int = Field(default=CONV_WIDTH, gt=0)
    dropout: float = Field(default=ENCODER_DROPOUT, ge=0.0, lt=1.0)

    @field_validator("conv_width")
    @classmethod
    def _odd_width(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError(f"conv_width must be odd, got {v}")
        return v

    @property
    def is_sequence(self) -> bool:
        return self.modality.is_sequence

    @classmethod
    def default_for(
        cls,
        modality: ModalityId,
        input_dim: int,
        output_dim: Optional[int] = None,
        dropout: float = ENCODER_DROPOUT,
    ) -> "EncoderSpec":
        modality = ModalityId(modality)
        if modality == ModalityId.FACE:
            hidden, out = CONV_FILTERS, FACE_EMBEDDING_DIM
        elif modality == ModalityId.BODY:
            hidden, out = CONV_FILTERS, BODY_EMBEDDING_DIM
        else:
            hidden, out = TEXT_HIDDEN_DIM, TEXT_HIDDEN_DIM
        return cls(
            modality=modality,
            input_dim=input_dim,
            hidden_dim=hidden,
            output_dim=output_dim or out,
            dropout=dropout,
        )


class ModelConfig(BaseModel):
    """Architecture of a classifier."""

    model_config = ConfigDict(frozen=True)

    kind: ModelKind = "malefic"
    modalities: Tuple[ModalityId, ...]
    encoders: Dict[str, EncoderSpec]
    fusion_dim: int = Field(default=DEFAULT_FUSION_DIM, gt=0)
    key_dim: int = Field(default=ATTENTION_KEY_DIM, gt=0)

    @field_validator("modalities", mode="before")
    @classmethod
    def _order(cls, v):
        return ordered_modalities(v)

    @model_validator(mode="after")
    def _consistent(self) -> "ModelConfig":
        if self.kind == "unimodal" and len(self.modalities) != 1:
            raise ValueError("a unimodal model takes exactly one modality")
        missing = [m.value for m in self.modalities if m.value not in self.encoders]
        if missing:
            raise ValueError(f"no encoder spec for {missing}")
        return self

    @classmethod
    def for_inputs(
        cls,
        kind: str,
        modalities,
        input_dims: Dict[str, int],
        fusion_dim: int = DEFAULT_FUSION_DIM,
        encoder_dropout: float = ENCODER_DROPOUT,
        output_dims: Optional[Dict[str, int]] = None,
    ) -> "ModelConfig":
        """Build a config with default encoder shapes for the given input sizes."""
        output_dims = output_dims or {}
        ordered = ordered_modalities(modalities)
        encoders = {
            m.value: EncoderSpec.default_for(m, input_dims[m.value], output_dims.get(m.value), encoder_dropout)
            for m in ordered
        }
        return cls(kind=kind, modalities=ordered, encoders=encoders, fusion_dim=fusion_dim)


class TrainConfig(BaseModel):
    """Training run settings; mirrors the documented keys of train.toml."""

    epochs: int = Field(ge=1)
    max_lr: float = Field(gt=0)
    scheduler: Literal["cosine", "one_cycle", "constant"] = "cosine"
    optimizer: Literal["adamw"] = "adamw"
    betas: Tuple[float, float] = ADAMW_BETAS
    eps: float = Field(default=ADAMW_EPS, gt=0)
    weight_decay: float = Field(default=ADAMW_WEIGHT_DECAY, ge=0)
    batch_size: int = Field(default=32, ge=1)
    modality_dropout: float = Field(default=MODALITY_DROPOUT_RATE, ge=0.0, le=1.0)
    seed: int = 13
    modalities: Optional[List[ModalityId]] = None
    model_kind: ModelKind = "malefic"
    fusion_dim: int = Field(default=DEFAULT_FUSION_DIM, gt=0)
    encoder_dropout: float = Field(default=ENCODER_DROPOUT, ge=0.0, lt=1.0)
    encoder_output: Dict[str, int] = Field(default_factory=dict)
    val_fraction: float = Field(default=VALIDATION_FRACTION, gt=0.0, lt=1.0)

    @field_validator("modalities", mode="before")
    @classmethod
    def _order(cls, v):
        return None if v is None else list(ordered_modalities(v))

    @classmethod
    def from_preset(cls, name: str, **overrides: Any) -> "TrainConfig":
        from config.presets import TRAINING_PRESETS

        if name not in TRAINING_PRESETS:
            raise ValueError(f"Unknown training preset '{name}'; expected one of {sorted(TRAINING_PRESETS)}")
        return cls(**{**TRAINING_PRESETS[name], **overrides})


class SyntheticCorpusSpec(BaseModel):
    """
    Parameters of the synthetic multimodal corpus.

    `informativeness` is the signal-to-noise ratio of each raw modality;
    `class_signal` optionally scales it per class (e.g. zero for classes a
    modality should not separate).
    """

    n_sessions: int = Field(default=10, ge=2)
    client_turns_per_session: int = Field(default=8, ge=1)
    max_sentences_per_turn: int = Field(default=2, ge=1)
    class_proportions: Dict[str, float] = Field(default_factory=lambda: dict(REFERENCE_CLASS_PROPORTIONS))
    availability: Dict[str, float] = Field(default_factory=lambda: dict(REFERENCE_AVAILABILITY))
    informativeness: Dict[str, float] = Field(
        default_factory=lambda: {"text": 2.0, "audio": 1.0, "face": 1.0, "body": 0.5}
    )
    class_signal: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    text_dim: int = Field(default=32, gt=0)
    audio_dim: int = Field(default=48, gt=0)
    face_frames: Tuple[int, int] = (16, 32)
    body_frames: Tuple[int, int] = (24, 40)
    fragment_rate: float = Field(default=0.25, ge=0.0, le=1.0)
    missing_frame_rate: float = Field(default=0.05, ge=0.0, lt=0.5)
    fps: float = Field(default=25.0, gt=0)

    @field_validator("class_proportions")
    @classmethod
    def _proportions(cls, v: Dict[str, float]) -> Dict[str, float]:
        if set(v) != set(LABEL_ORDER):
            raise ValueError(f"class_proportions needs exactly {list(LABEL_ORDER)}")
        if any(p < 0 for p in v.values()) or abs(sum(v.values()) - 1.0) > 1e-6:
            raise ValueError("class proportions must be non-negative and sum to 1")
        return v

    @field_validator("availability", "informativeness")
    @classmethod
    def _raw_keys(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = set(v) - set(RAW_MODALITIES)
        if unknown:
            raise ValueError(f"unknown modalities {sorted(unknown)}; expected {list(RAW_MODALITIES)}")
        return {m: float(v.get(m, 0.0)) for m in RAW_MODALITIES}

    @field_validator("availability")
    @classmethod
    def _rates(cls, v: Dict[str, float]) -> Dict[str, float]:
        if any(not 0.0 <= r <= 1.0 for r in v.values()):
            raise ValueError("availability rates must lie in [0, 1]")
        return v

    @field_validator("face_frames", "body_frames")
    @classmethod
    def _frames(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < v[0]:
            raise ValueError(f"frame range must satisfy 1 <= min <= max, got {v}")
        return v

    @model_validator(mode="after")
    def _body_long_enough(self) -> "SyntheticCorpusSpec":
        if self.body_frames[0] <= QOM_LAG_FRAMES:
            raise ValueError(f"body tracks need more than {QOM_LAG_FRAMES} frames for quantity of motion")
        return self

    def signal(self, modality: str, label: str) -> float:
        return self.informativeness.get(modality, 0.0) * self.class_signal.get(modality, {}).get(label, 1.0)


class EvaluationConfig(BaseModel):
    bootstrap_samples: int = Field(default=BOOTSTRAP_SAMPLES, ge=1)
    confidence_level: float = Field(default=CONFIDENCE_LEVEL, gt=0.0, lt=1.0)
    batch_size: int = Field(default=64, ge=1)


class InterpretConfig(BaseModel):
    k_min: int = Field(default=CLUSTER_K_RANGE[0], ge=1)
    k_max: int = Field(default=CLUSTER_K_RANGE[1], ge=2)
    restarts: int = Field(default=CLUSTER_RESTARTS, ge=1)
    histogram_bins: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _range(self) -> "InterpretConfig":
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        return self


class PipelineConfig(BaseModel):
    """Effective configuration of a whole pipeline run."""

    preset: str = "tiny"
    seed: int = 13
    modalities: Optional[List[ModalityId]] = None
    corpus: SyntheticCorpusSpec = Field(default_factory=SyntheticCorpusSpec)
    train: TrainConfig
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    interpret: InterpretConfig = Field(default_factory=InterpretConfig)

    @field_validator("modalities", mode="before")
    @classmethod
    def _order(cls, v):
        return None if v is None else list(ordered_modalities(v))

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
