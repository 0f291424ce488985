"""
Optimizer and Learning-Rate Schedules

AdamW with decoupled weight decay, and the cosine, one-cycle and constant
schedules used by the training presets.
"""

import logging
import math
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from config.constants import (
    ADAMW_BETAS,
    ADAMW_EPS,
    ADAMW_WEIGHT_DECAY,
    ONE_CYCLE_DIV_FACTOR,
    ONE_CYCLE_FINAL_DIV_FACTOR,
    ONE_CYCLE_WARMUP_FRACTION,
)
from core.autograd import Parameter
from utils.errors import ParameterError

logger = logging.getLogger(__name__)

SCHEDULERS = ("cosine", "one_cycle", "constant")


def adamw_step(
    params: Iterable[Parameter],
    lr: float,
    betas: Tuple[float, float] = ADAMW_BETAS,
    eps: float = ADAMW_EPS,
    weight_decay: float = ADAMW_WEIGHT_DECAY,
) -> List[Parameter]:
    """
    Apply one AdamW update in place.

    Args:
        params: Parameters with populated gradients
        lr: Learning rate, > 0
        betas: Moment decay rates
        eps: Denominator epsilon
        weight_decay: Decoupled decay coefficient

    Returns:
        The updated parameters
    """
    if not lr > 0:
        raise ParameterError(f"learning rate must be positive, got {lr}", lr=lr)
    beta1, beta2 = betas
    updated = []
    for p in params:
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * p.grad
        p.v = beta2 * p.v + (1.0 - beta2) * p.grad ** 2
        m_hat = p.m / (1.0 - beta1 ** p.step)
        v_hat = p.v / (1.0 - beta2 ** p.step)
        p.data -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * p.data)
        updated.append(p)
    return updated


class AdamW:
    """Stateful wrapper around `adamw_step` for a fixed parameter list."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        betas: Tuple[float, float] = ADAMW_BETAS,
        eps: float = ADAMW_EPS,
        weight_decay: float = ADAMW_WEIGHT_DECAY,
    ):
        if not lr > 0:
            raise ParameterError(f"learning rate must be positive, got {lr}", lr=lr)
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self, lr: float = None) -> None:
        adamw_step(self.params, lr if lr is not None else self.lr, self.betas, self.eps, self.weight_decay)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


# ===== Schedules =====

def _check_schedule(max_lr: float, total_steps: int) -> None:
    if total_steps <= 0:
        raise ParameterError(f"total_steps must be positive, got {total_steps}")
    if not max_lr > 0:
        raise ParameterError(f"max_lr must be positive, got {max_lr}")


def cosine_annealing(max_lr: float, total_steps: int) -> np.ndarray:
    """
    Single-cycle cosine decay.

    Returns:
        Learning rate for t = 0..total_steps (total_steps + 1 values)
    """
    _check_schedule(max_lr, total_steps)
    t = np.arange(total_steps + 1)
    return 0.5 * max_lr * (1.0 + np.cos(math.pi * t / total_steps))


def one_cycle(
    max_lr: float,
    total_steps: int,
    warmup_fraction: float = ONE_CYCLE_WARMUP_FRACTION,
    div_factor: float = ONE_CYCLE_DIV_FACTOR,
    final_div_factor: float = ONE_CYCLE_FINAL_DIV_FACTOR,
) -> np.ndarray:
    """
    Linear warm-up from max_lr/div_factor to max_lr over floor(warmup_fraction *
    total_steps) steps, then cosine decay to max_lr/(div_factor * final_div_factor).

    Returns:
        Learning rate for t = 0..total_steps
    """
    _check_schedule(max_lr, total_steps)
    if not 0.0 <= warmup_fraction < 1.0:
        raise ParameterError(f"warmup_fraction must lie in [0, 1), got {warmup_fraction}")
    start = max_lr / div_factor
    floor = start / final_div_factor
    peak = int(math.floor(warmup_fraction * total_steps))
    t = np.arange(total_steps + 1, dtype=np.float64)
    warm = start + (max_lr - start) * t / peak if peak > 0 else np.full_like(t, max_lr)
    progress = (t - peak) / (total_steps - peak)
    decay = floor + 0.5 * (max_lr - floor) * (1.0 + np.cos(math.pi * progress))
    return np.where(t <= peak, warm, decay)


def constant(max_lr: float, total_steps: int) -> np.ndarray:
    _check_schedule(max_lr, total_steps)
    return np.full(total_steps + 1, max_lr, dtype=np.float64)


def build_schedule(kind: str, max_lr: float, total_steps: int) -> np.ndarray:
    """Learning-rate array for a named schedule."""
    if kind == "cosine":
        return cosine_annealing(max_lr, total_steps)
    if kind == "one_cycle":
        return one_cycle(max_lr, total_steps)
    if kind == "constant":
        return constant(max_lr, total_steps)
    raise ParameterError(f"Unknown scheduler '{kind}'; expected one of {list(SCHEDULERS)}")
