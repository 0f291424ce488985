"""
Differentiable Primitives

Every function takes and returns `Value`s and installs the matching backward
rule. Broadcasting is limited to equal shapes, scalars, and trailing-suffix
shapes (matrix-vector and per-channel operations); anything else raises
ShapeError naming both operands.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config.constants import LAYER_NORM_EPS, LEAKY_RELU_SLOPE
from core.autograd import ArrayLike, Value, as_value
from utils.errors import ParameterError, ShapeError

Axis = Optional[Union[int, Tuple[int, ...]]]


# ===== Shape helpers =====

def _check_suffix(op: str, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    if a == b:
        return a
    if len(a) == 0 or int(np.prod(a)) == 1 and len(a) <= 1:
        return b
    if len(b) == 0 or int(np.prod(b)) == 1 and len(b) <= 1:
        return a
    long_, short = (a, b) if len(a) >= len(b) else (b, a)
    if long_[len(long_) - len(short):] == short:
        return long_
    raise ShapeError(op, a, b)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    if lead > 0:
        grad = grad.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ===== Elementwise =====

def add(a: ArrayLike, b: ArrayLike) -> Value:
    a, b = as_value(a), as_value(b)
    _check_suffix("add", a.shape, b.shape)
    out = Value(a.data + b.data, (a, b), "add")

    def _backward():
        a.grad += _unbroadcast(out.grad, a.shape)
        b.grad += _unbroadcast(out.grad, b.shape)

    out._backward = _backward
    return out


def mul(a: ArrayLike, b: ArrayLike) -> Value:
    a, b = as_value(a), as_value(b)
    _check_suffix("mul", a.shape, b.shape)
    out = Value(a.data * b.data, (a, b), "mul")

    def _backward():
        a.grad += _unbroadcast(out.grad * b.data, a.shape)
        b.grad += _unbroadcast(out.grad * a.data, b.shape)

    out._backward = _backward
    return out


def neg(a: ArrayLike) -> Value:
    a = as_value(a)
    out = Value(-a.data, (a,), "neg")

    def _backward():
        a.grad += -out.grad

    out._backward = _backward
    return out


def scale(a: ArrayLike, factor: float) -> Value:
    a = as_value(a)
    out = Value(a.data * factor, (a,), "scale")

    def _backward():
        a.grad += out.grad * factor

    out._backward = _backward
    return out


def leaky_relu(x: ArrayLike, slope: float = LEAKY_RELU_SLOPE) -> Value:
    x = as_value(x)
    positive = x.data > 0
    out = Value(np.where(positive, x.data, slope * x.data), (x,), "leaky_relu")

    def _backward():
        x.grad += out.grad * np.where(positive, 1.0, slope)

    out._backward = _backward
    return out


def dropout(x: ArrayLike, p: float, rng: Optional[np.random.Generator], training: bool) -> Value:
    """
    Inverted dropout: zero each entry with probability p and scale survivors
    by 1/(1-p). Identity outside training mode.
    """
    x = as_value(x)
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout probability must lie in [0, 1), got {p}", p=p)
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ParameterError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    out = Value(x.data * keep, (x,), "dropout")

    def _backward():
        x.grad += out.grad * keep

    out._backward = _backward
    return out


def where_mask(x: ArrayLike, mask: np.ndarray) -> Value:
    """Keep entries where mask is True, +0.0 elsewhere; mask broadcasts against x."""
    x = as_value(x)
    keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    out = Value(np.where(keep, x.data, 0.0), (x,), "where_mask")

    def _backward():
        x.grad += np.where(keep, out.grad, 0.0)

    out._backward = _backward
    return out


# ===== Linear algebra =====

def matmul(a: ArrayLike, b: ArrayLike) -> Value:
    """
    Matrix product for `[..., n, k] @ [k, m]`, `[k] @ [k, m]`, and batched
    `[B..., n, k] @ [B..., k, m]` with equal leading dimensions.
    """
    a, b = as_value(a), as_value(b)
    if a.ndim == 0 or b.ndim == 0 or a.shape[-1] != b.shape[-2 if b.ndim >= 2 else 0]:
        raise ShapeError("matmul", a.shape, b.shape)
    if b.ndim == 2:
        out = Value(a.data @ b.data, (a, b), "matmul")
        k, m = b.shape

        def _backward():
            a.grad += out.grad @ b.data.T
            if a.ndim == 1:
                b.grad += np.outer(a.data, out.grad)
            else:
                b.grad += a.data.reshape(-1, k).T @ out.grad.reshape(-1, m)

    elif b.ndim > 2 and a.ndim == b.ndim and a.shape[:-2] == b.shape[:-2]:
        out = Value(np.matmul(a.data, b.data), (a, b), "matmul")

        def _backward():
            a.grad += np.matmul(out.grad, np.swapaxes(b.data, -1, -2))
            b.grad += np.matmul(np.swapaxes(a.data, -1, -2), out.grad)

    else:
        raise ShapeError("matmul", a.shape, b.shape)
    out._backward = _backward
    return out


def swap_last(x: ArrayLike) -> Value:
    """Transpose the last two axes."""
    x = as_value(x)
    if x.ndim < 2:
        raise ShapeError("swap_last", x.shape)
    out = Value(np.swapaxes(x.data, -1, -2), (x,), "swap_last")

    def _backward():
        x.grad += np.swapaxes(out.grad, -1, -2)

    out._backward = _backward
    return out


def reshape(x: ArrayLike, shape: Sequence[int]) -> Value:
    x = as_value(x)
    try:
        data = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape)) from None
    out = Value(data, (x,), "reshape")

    def _backward():
        x.grad += out.grad.reshape(x.shape)

    out._backward = _backward
    return out


def take(x: ArrayLike, key) -> Value:
    """Basic or advanced indexing; gradients scatter-add back."""
    x = as_value(x)
    out = Value(x.data[key], (x,), "take")

    def _backward():
        np.add.at(x.grad, key, out.grad)

    out._backward = _backward
    return out


# ===== Reductions =====

def sum(x: ArrayLike, axis: Axis = None, keepdims: bool = False) -> Value:  # noqa: A001
    x = as_value(x)
    out = Value(x.data.sum(axis=axis, keepdims=keepdims), (x,), "sum")

    def _backward():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x.grad += np.broadcast_to(g, x.shape)

    out._backward = _backward
    return out


def mean_pool(x: ArrayLike, axis: int = -2) -> Value:
    """Mean over one axis (time for (T, C) sequences)."""
    x = as_value(x)
    n = x.shape[axis]
    if n == 0:
        raise ShapeError("mean_pool", x.shape)
    return scale(sum(x, axis=axis), 1.0 / n)


# ===== Normalization =====

def softmax(x: ArrayLike, axis: int = -1, mask: Optional[np.ndarray] = None) -> Value:
    """
    Softmax along `axis`. Entries where `mask` is False get probability
    exactly 0 and the rest renormalizes.

    Raises:
        ParameterError: If a slice along `axis` is fully masked
    """
    x = as_value(x)
    if mask is None:
        keep = np.ones(x.shape, dtype=bool)
    else:
        keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not keep.any(axis=axis).all():
            raise ParameterError("softmax over a fully masked slice")
    z = np.where(keep, x.data, -np.inf)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.where(keep, np.exp(z), 0.0)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Value(y, (x,), "softmax")

    def _backward():
        g = out.grad
        x.grad += y * (g - (g * y).sum(axis=axis, keepdims=True))

    out._backward = _backward
    return out


def layer_norm(x: ArrayLike, gamma: ArrayLike, beta: ArrayLike, eps: float = LAYER_NORM_EPS) -> Value:
    """Normalize over the last axis, then scale by gamma and shift by beta."""
    x, gamma, beta = as_value(x), as_value(gamma), as_value(beta)
    n = x.shape[-1]
    if gamma.shape != (n,) or beta.shape != (n,):
        raise ShapeError("layer_norm", x.shape, gamma.shape)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    out = Value(xhat * gamma.data + beta.data, (x, gamma, beta), "layer_norm")

    def _backward():
        g = out.grad
        gxhat = g * gamma.data
        x.grad += (inv_std / n) * (
            n * gxhat
            - gxhat.sum(axis=-1, keepdims=True)
            - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True)
        )
        gamma.grad += (g * xhat).reshape(-1, n).sum(axis=0)
        beta.grad += g.reshape(-1, n).sum(axis=0)

    out._backward = _backward
    return out


# ===== Convolution =====

def conv1d(x: ArrayLike, weight: ArrayLike, bias: ArrayLike) -> Value:
    """
    Convolution over the time axis with channel mixing and zero "same" padding.

    Args:
        x: (T, C_in) or (B, T, C_in)
        weight: (width, C_in, C_out), width odd
        bias: (C_out,)

    Returns:
        (T, C_out) or (B, T, C_out)
    """
    x, weight, bias = as_value(x), as_value(weight), as_value(bias)
    width, c_in, c_out = weight.shape
    if width % 2 == 0:
        raise ParameterError(f"conv1d width must be odd, got {width}", width=width)
    if x.ndim < 2 or x.shape[-1] != c_in or bias.shape != (c_out,):
        raise ShapeError("conv1d", x.shape, weight.shape)
    T = x.shape[-2]
    if T == 0:
        raise ShapeError("conv1d", x.shape, weight.shape)
    pad = width // 2
    pad_spec = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (0, 0)]
    padded = np.pad(x.data, pad_spec)
    windows = sliding_window_view(padded, width, axis=-2)  # (..., T, C_in, width)
    out = Value(np.einsum("...tcw,wco->...to", windows, weight.data) + bias.data, (x, weight, bias), "conv1d")

    def _backward():
        g = out.grad
        weight.grad += np.einsum("...tcw,...to->wco", windows, g)
        bias.grad += g.reshape(-1, c_out).sum(axis=0)
        gpad = np.zeros_like(padded)
        for k in range(width):
            gpad[..., k:k + T, :] += g @ weight.data[k].T
        x.grad += gpad[..., pad:pad + T, :]

    out._backward = _backward
    return out


# ===== Structure =====

def concat(values: Sequence[ArrayLike], axis: int = -1) -> Value:
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeError("concat")
    try:
        data = np.concatenate([v.data for v in values], axis=axis)
    except ValueError:
        raise ShapeError("concat", *[v.shape for v in values]) from None
    out = Value(data, tuple(values), "concat")
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

    def _backward():
        for v, g in zip(values, np.split(out.grad, bounds, axis=axis)):
            v.grad += g

    out._backward = _backward
    return out


def stack(values: Sequence[ArrayLike], axis: int = 0) -> Value:
    values = [as_value(v) for v in values]
    if not values or len({v.shape for v in values}) != 1:
        raise ShapeError("stack", *[v.shape for v in values])
    out = Value(np.stack([v.data for v in values], axis=axis), tuple(values), "stack")

    def _backward():
        for i, v in enumerate(values):
            v.grad += np.take(out.grad, i, axis=axis)

    out._backward = _backward
    return out


# ===== Loss =====

def cross_entropy(logits: ArrayLike, labels: Sequence[int]) -> Value:
    """
    Mean negative log-likelihood of `labels` under softmax(logits).

    Args:
        logits: (B, K)
        labels: (B,) class indices
    """
    logits = as_value(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError("cross_entropy", logits.shape, labels.shape)
    B, K = logits.shape
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ParameterError(f"labels must lie in [0, {K})")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(B)
    out = Value(-log_probs[rows, labels].mean(), (logits,), "cross_entropy")

    def _backward():
        g = np.exp(log_probs)
        g[rows, labels] -= 1.0
        logits.grad += g * (out.grad / B)

    out._backward = _backward
    return out


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Sinusoidal positional encoding, (length, dim)."""
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.exp(-np.log(10000.0) * (2 * (np.arange(dim) // 2)) / dim)
    angles = positions * rates[None, :]
    return np.where(np.arange(dim) % 2 == 0, np.sin(angles), np.cos(angles))
