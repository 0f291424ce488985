"""
Neural Network Layers

`Module` collects parameters from its attributes (Parameters, sub-Modules,
and lists or dicts of Modules) in definition order, so parameter names and
the optimizer's parameter list are stable across runs.
"""

from typing import Dict, Iterator, List, Tuple

import numpy as np

from config.constants import LAYER_NORM_EPS
from core import ops
from core.autograd import ArrayLike, Parameter, Value, as_value
from utils.errors import CheckpointError, ShapeError


class Module:
    """Base class for everything with parameters."""

    training: bool = True

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")
            elif isinstance(value, dict):
                for key, item in value.items():
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{key}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            children = value if isinstance(value, (list, tuple)) else (
                value.values() if isinstance(value, dict) else [value]
            )
            for child in children:
                if isinstance(child, Module):
                    yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy tensors into the module's parameters.

        Raises:
            CheckpointError: On missing, unexpected or mis-shaped tensors
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError(
                "State does not match the model's parameters",
                missing=missing,
                unexpected=unexpected,
            )
        for name, p in own.items():
            data = np.asarray(state[name], dtype=np.float64)
            if data.shape != p.shape:
                raise CheckpointError(
                    f"Parameter {name}: expected shape {p.shape}, got {data.shape}",
                    parameter=name,
                )
            p.data = data.copy()
            p.zero_grad()
            p.reset_state()


def uniform_fan_in(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Dense(Module):
    """Affine map `x @ W + b`; W ~ U(±1/sqrt(in_dim)), b = 0."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(uniform_fan_in(rng, in_dim, (in_dim, out_dim)))
        self.bias = Parameter(np.zeros(out_dim))

    def __call__(self, x: ArrayLike) -> Value:
        x = as_value(x)
        if x.ndim == 0 or x.shape[-1] != self.in_dim:
            raise ShapeError("dense", x.shape, self.weight.shape)
        return ops.add(ops.matmul(x, self.weight), self.bias)


class Conv1d(Module):
    """Time-axis convolution with channel mixing, "same" padding."""

    def __init__(self, in_channels: int, out_channels: int, width: int, rng: np.random.Generator):
        self.weight = Parameter(uniform_fan_in(rng, in_channels * width, (width, in_channels, out_channels)))
        self.bias = Parameter(np.zeros(out_channels))

    def __call__(self, x: ArrayLike) -> Value:
        return ops.conv1d(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = LAYER_NORM_EPS):
        self.eps = eps
        self.gamma = Parameter(np.ones(dim))
        self.beta = Parameter(np.zeros(dim))

    def __call__(self, x: ArrayLike) -> Value:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)
