"""Core module for the MALEFIC classifier"""

from .autograd import Parameter, Value
from .gradcheck import grad_check
from .optim import AdamW, adamw_step, build_schedule, cosine_annealing, one_cycle
from .layers import Conv1d, Dense, LayerNorm, Module
from .encoders import EmbeddingEncoder, ModalityBranch, SequenceEncoder
from .fusion import MaleficFusion, fusion_backward, modality_dropout
from .classifier import ConcatClassifier, MaleficClassifier, UnimodalClassifier, build_model
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Parameter",
    "Value",
    "grad_check",
    "AdamW",
    "adamw_step",
    "build_schedule",
    "cosine_annealing",
    "one_cycle",
    "Conv1d",
    "Dense",
    "LayerNorm",
    "Module",
    "EmbeddingEncoder",
    "ModalityBranch",
    "SequenceEncoder",
    "MaleficFusion",
    "fusion_backward",
    "modality_dropout",
    "ConcatClassifier",
    "MaleficClassifier",
    "UnimodalClassifier",
    "build_model",
    "load_checkpoint",
    "save_checkpoint",
]
