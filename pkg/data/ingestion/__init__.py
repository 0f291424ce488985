"""
Data Ingestion Module

Transcript reorganization, manifests, the dataset index and dataset loading.
"""

from .transcripts import (
    TranscriptReorganizer,
    merge_turn_sentences,
    remove_backchannels,
    resolve_label,
)
from .embeddings import read_embedding, write_embedding
from .manifests import SessionManifest, load_manifests
from .index_builder import DatasetIndexBuilder, build_dataset_index, mask_statistics
from .dataset import MultimodalDataset, iter_batches

__all__ = [
    "TranscriptReorganizer",
    "merge_turn_sentences",
    "remove_backchannels",
    "resolve_label",
    "read_embedding",
    "write_embedding",
    "SessionManifest",
    "load_manifests",
    "DatasetIndexBuilder",
    "build_dataset_index",
    "mask_statistics",
    "MultimodalDataset",
    "iter_batches",
]
