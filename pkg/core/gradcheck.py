"""
Finite-Difference Gradient Check

Compares reverse-mode gradients with central differences.
"""

from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from core.autograd import Value, as_value

RELATIVE_FLOOR = 1e-4


def grad_check(
    fn: Callable[..., Value],
    inputs: Sequence[Union[Value, np.ndarray]],
    h: float = 1e-5,
    sample: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Maximum relative error between analytic and numeric gradients.

    `fn` is called as `fn(*values)` and must return a single-element Value;
    it must be deterministic (seed any dropout inside it). Errors are
    |a - n| / max(|a|, |n|, 1e-4).

    Args:
        fn: Function of the input Values
        inputs: Values (or arrays, wrapped as leaves) to differentiate against;
            Parameters are perturbed in place and restored
        h: Central-difference step
        sample: Check at most this many randomly chosen entries per input
        rng: Generator used for sampling entries

    Returns:
        Largest relative error over all checked entries
    """
    values: List[Value] = [as_value(x) for x in inputs]
    for v in values:
        v.zero_grad()
    out = fn(*values)
    out.backward()
    analytic = [v.grad.copy() for v in values]

    worst = 0.0
    for v, grad in zip(values, analytic):
        indices = np.arange(v.size)
        if sample is not None and v.size > sample:
            rng = rng or np.random.default_rng(0)
            indices = rng.choice(v.size, size=sample, replace=False)
        for i in indices:
            pos = np.unravel_index(i, v.shape)
            original = v.data[pos]
            v.data[pos] = original + h
            f_plus = fn(*values).item()
            v.data[pos] = original - h
            f_minus = fn(*values).item()
            v.data[pos] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = grad[pos]
            err = abs(a - numeric) / max(abs(a), abs(numeric), RELATIVE_FLOOR)
            worst = max(worst, err)
    return float(worst)
