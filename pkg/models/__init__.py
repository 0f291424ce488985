"""Models module for the MALEFIC classifier"""

from .modality import ALL_LABELS, ALL_MODALITIES, MiscLabel, ModalityId
from .transcript import Sentence, Speaker, Utterance
from .tracks import AUTrack, BodyFeatureTrack, KeypointTrack
from .fusion import AttentionMatrix, DockedEmbedding, FusionOutput, SelectionMap, SelectionMode
from .dataset import Batch, DatasetEntry, DatasetIndex, MultimodalSample
from .report import ClusterReport, EpochRecord, EvalReport, F1Scores, SpecializationReport

__all__ = [
    "ALL_LABELS",
    "ALL_MODALITIES",
    "MiscLabel",
    "ModalityId",
    "Sentence",
    "Speaker",
    "Utterance",
    "AUTrack",
    "BodyFeatureTrack",
    "KeypointTrack",
    "AttentionMatrix",
    "DockedEmbedding",
    "FusionOutput",
    "SelectionMap",
    "SelectionMode",
    "Batch",
    "DatasetEntry",
    "DatasetIndex",
    "MultimodalSample",
    "ClusterReport",
    "EpochRecord",
    "EvalReport",
    "F1Scores",
    "SpecializationReport",
]
