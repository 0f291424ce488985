"""
Reverse-Mode Automatic Differentiation

A `Value` wraps a float64 numpy array and records the operation that produced
it. Calling `backward()` on a scalar result walks the graph in reverse
topological order and accumulates gradients into every node.
"""

from typing import Callable, Iterable, List, Optional, Tuple, Union

import numpy as np

ArrayLike = Union[np.ndarray, float, int, "Value"]


class Value:
    """
    A node in the differentiation graph.

    Attributes:
        data: Forward value (float64 array)
        grad: Gradient accumulator, same shape as data
    """

    def __init__(self, data, _children: Iterable["Value"] = (), _op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self._prev: Tuple["Value", ...] = tuple(_children)
        self._op = _op
        self._backward: Callable[[], None] = lambda: None

    # ===== Shape helpers =====

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        op = f", op={self._op}" if self._op else ""
        return f"Value(shape={self.shape}{op})"

    # ===== Backward =====

    def _topological_order(self) -> List["Value"]:
        order: List[Value] = []
        visited = set()
        stack: List[Tuple[Value, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in visited:
                    stack.append((child, False))
        return order

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Accumulate d(self)/d(node) into every node of the graph.

        Args:
            grad: Seed gradient; defaults to 1 for a single-element value
        """
        if grad is None:
            if self.data.size != 1:
                raise ValueError(f"backward() without a seed needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        self.grad = self.grad + np.asarray(grad, dtype=np.float64).reshape(self.shape)
        for node in reversed(self._topological_order()):
            node._backward()

    # ===== Operators =====

    def __add__(self, other: ArrayLike) -> "Value":
        from core import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Value":
        from core import ops
        return ops.add(self, ops.neg(as_value(other)))

    def __rsub__(self, other: ArrayLike) -> "Value":
        from core import ops
        return ops.add(as_value(other), ops.neg(self))

    def __neg__(self) -> "Value":
        from core import ops
        return ops.neg(self)

    def __mul__(self, other: ArrayLike) -> "Value":
        from core import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other: ArrayLike) -> "Value":
        from core import ops
        return ops.matmul(self, other)

    def __getitem__(self, key) -> "Value":
        from core import ops
        return ops.take(self, key)


class Parameter(Value):
    """
    A trainable leaf carrying AdamW state.

    Attributes:
        name: Dotted name inside its module tree
        m: First-moment accumulator
        v: Second-moment accumulator
        step: Number of optimizer updates applied
    """

    def __init__(self, data, name: str = ""):
        super().__init__(data, (), "param")
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0

    def reset_state(self) -> None:
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def as_value(x: ArrayLike) -> Value:
    """Wrap constants as graph leaves; Values pass through."""
    return x if isinstance(x, Value) else Value(x)
