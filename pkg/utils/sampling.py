"""
Sampling Utilities

Seed spawning, the class-balancing sampler and the session-level split.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import ParameterError

logger = logging.getLogger(__name__)


def spawn_generators(seed: int, n: int) -> List[np.random.Generator]:
    """
    Derive independent generators from one seed.

    Args:
        seed: Run seed
        n: Number of generators

    Returns:
        List of n generators, stable for a given seed
    """
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(n)]


def class_weights(labels: Sequence[int]) -> np.ndarray:
    """Per-sample weight 1 / count(class of the sample)."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels)
    return 1.0 / counts[labels]


def weighted_sampler(
    labels: Sequence[int],
    rng: np.random.Generator,
    num_samples: int = None,
) -> np.ndarray:
    """
    Draw sample indices with probability proportional to 1/count(class).

    Every present class ends up with the same expected frequency; absent
    classes carry no samples and are never drawn.

    Args:
        labels: Label index per sample
        rng: Random generator
        num_samples: Number of draws (default: len(labels))

    Returns:
        Array of drawn indices, with replacement
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ParameterError("weighted_sampler needs at least one label")
    weights = class_weights(labels)
    probabilities = weights / weights.sum()
    size = labels.size if num_samples is None else int(num_samples)
    return rng.choice(labels.size, size=size, replace=True, p=probabilities)


def session_split(
    session_ids: Sequence[str],
    rng: np.random.Generator,
    val_fraction: float = 0.2,
) -> Tuple[List[str], List[str]]:
    """
    Split sessions into train and validation sets.

    Args:
        session_ids: Session ids (duplicates allowed)
        rng: Random generator
        val_fraction: Share of sessions held out

    Returns:
        (train_sessions, val_sessions), each sorted

    Raises:
        ParameterError: If fewer than two sessions exist
    """
    sessions = sorted(set(session_ids))
    if len(sessions) < 2:
        raise ParameterError(
            f"A session-level split needs at least 2 sessions, got {len(sessions)}"
        )
    if not 0.0 < val_fraction < 1.0:
        raise ParameterError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    n_val = min(len(sessions) - 1, max(1, int(round(val_fraction * len(sessions)))))
    order = rng.permutation(len(sessions))
    val = sorted(sessions[i] for i in order[:n_val])
    train = sorted(sessions[i] for i in order[n_val:])
    logger.debug(f"Session split: {len(train)} train / {len(val)} validation")
    return train, val
