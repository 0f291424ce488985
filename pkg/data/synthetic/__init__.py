"""Synthetic corpus generation"""

from .generator import CorpusSummary, SyntheticCorpusGenerator, generate_synthetic_corpus

__all__ = ["CorpusSummary", "SyntheticCorpusGenerator", "generate_synthetic_corpus"]
