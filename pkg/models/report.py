"""
Report Models

Result containers for training, evaluation and interpretation.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config.constants import LABEL_ORDER

ROW_SUM_TOLERANCE = 1e-6


@dataclass
class EpochRecord:
    """Per-epoch training log entry."""

    epoch: int
    train_loss: float
    val_loss: float
    val_macro_f1: float
    lr: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class F1Scores:
    """
    Per-class, micro and macro F1.

    Attributes:
        per_class: F1 per label name
        degenerate_classes: Classes whose precision + recall is 0
    """

    per_class: Dict[str, float]
    micro: float
    macro: float
    degenerate_classes: int = 0

    def __post_init__(self):
        for name, value in [*self.per_class.items(), ("micro", self.micro), ("macro", self.macro)]:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"F1 '{name}' must be between 0 and 1, got {value}")


@dataclass
class EvalReport:
    """
    Classification report with bootstrap intervals.

    Attributes:
        f1: Per-class F1 in LABEL_ORDER
        f1_micro: Micro F1 (equals accuracy)
        f1_macro: Unweighted class mean
        ci: [lo, hi] per metric name ("CT", "ST", "FN", "micro", "macro")
        confusion: Row-normalized 3x3 matrix, rows = actual
        confusion_counts: Raw 3x3 counts
        n_samples: Number of evaluated samples
        degenerate_classes: Classes with F1 defined as 0 by convention
    """

    f1: Dict[str, float]
    f1_micro: float
    f1_macro: float
    ci: Dict[str, Tuple[float, float]]
    confusion: List[List[float]]
    confusion_counts: List[List[int]]
    n_samples: int
    degenerate_classes: int = 0
    bootstrap_samples: int = 0
    labels: List[str] = field(default_factory=lambda: list(LABEL_ORDER))

    def __post_init__(self):
        points = {**self.f1, "micro": self.f1_micro, "macro": self.f1_macro}
        for name, value in points.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"F1 '{name}' must be between 0 and 1, got {value}")
        for name, (lo, hi) in self.ci.items():
            if not lo <= points[name] <= hi:
                raise ValueError(f"CI for '{name}' [{lo}, {hi}] does not contain {points[name]}")
        counts = np.asarray(self.confusion_counts)
        rows = np.asarray(self.confusion).sum(axis=1)
        present = counts.sum(axis=1) > 0
        if np.any(np.abs(rows[present] - 1.0) > ROW_SUM_TOLERANCE):
            raise ValueError("confusion rows of present classes must sum to 1")

    def point(self, metric: str) -> float:
        if metric == "micro":
            return self.f1_micro
        if metric == "macro":
            return self.f1_macro
        return self.f1[metric]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ci"] = {k: [float(lo), float(hi)] for k, (lo, hi) in self.ci.items()}
        return data


@dataclass
class SpecializationReport:
    """
    Per-dimension selection frequencies.

    Attributes:
        frequencies: (M, c), columns sum to 1
        specialized: (M, c) True where a modality is always chosen
        dead: (M, c) True where a modality is never chosen
    """

    frequencies: np.ndarray
    specialized: np.ndarray
    dead: np.ndarray
    modalities: List[str]

    def __post_init__(self):
        if self.frequencies.shape[0] != len(self.modalities):
            raise ValueError("one frequency row per modality is required")

    def flagged(self, kind: str = "specialized") -> List[Tuple[str, int]]:
        """(modality, dimension) pairs carrying the given flag."""
        flags = self.specialized if kind == "specialized" else self.dead
        return [(self.modalities[m], int(d)) for m, d in zip(*np.nonzero(flags))]


@dataclass
class ClusterReport:
    """
    K-means clustering of contribution profiles.

    Attributes:
        k: Chosen number of clusters
        assignments: Cluster id per profile
        centroids: (k, M) centroids in contribution space
        silhouette: Euclidean silhouette at k
        inertia: Best-of-restarts inertia per candidate k
        degenerate: True when every profile is identical
        elbow: Elbow k, None when no elbow can be claimed
    """

    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    silhouette: float
    inertia: Dict[int, float]
    degenerate: bool = False
    elbow: Optional[int] = None
    shares: List[float] = field(default_factory=list)
    dominant_modality: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not -1.0 <= self.silhouette <= 1.0:
            raise ValueError(f"silhouette must lie in [-1, 1], got {self.silhouette}")
        if self.assignments.size and (self.assignments.min() < 0 or self.assignments.max() >= self.k):
            raise ValueError("assignments must index the k clusters")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "elbow": self.elbow,
            "degenerate": self.degenerate,
            "silhouette": float(self.silhouette),
            "inertia": {str(k): float(v) for k, v in sorted(self.inertia.items())},
            "centroids": np.asarray(self.centroids).tolist(),
            "shares": [float(s) for s in self.shares],
            "dominant_modality": list(self.dominant_modality),
            "n_samples": int(self.assignments.size),
        }
