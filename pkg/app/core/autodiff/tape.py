"""
Reverse-Mode Differentiation Tape 🧮

This module provides the dense-tensor numeric core the network and the loss are
built from. Every primitive computes its forward value with numpy and records a
closure that pushes the output gradient back to its inputs.

---
DESIGN PRINCIPLES:
1.  Explicit Tape: nodes are appended in creation order, so reversed creation
    order is a valid topological order for backward().
2.  Additive Accumulation: a node used by several consumers receives the sum of
    their gradients (fan-out).
3.  Suffix Broadcasting Only: add/mul accept operands whose shapes agree, or whose
    smaller shape is a trailing suffix of the larger (bias add over leading axes).
    Anything else is a ShapeMismatchError.
4.  Precision: a tape has one dtype. Tests run float64; training may run float32.
"""

from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit

from app.exceptions import RateOutOfRangeError, ShapeMismatchError

from .random import SeededRng

Array = NDArray[np.floating[Any]]
BackwardFn = Callable[[], None]


class Value:
    """A tensor on a tape together with its gradient accumulator."""

    __slots__ = ("data", "grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data: Array,
        parents: tuple["Value", ...] = (),
        name: str | None = None,
    ):
        self.data = data
        self.grad = np.zeros_like(data)
        self.name = name
        self._parents = parents
        self._backward: BackwardFn | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        label = f"{self.name}, " if self.name else ""
        return f"Value({label}shape={self.shape}, dtype={self.data.dtype})"


def _is_suffix(small: tuple[int, ...], large: tuple[int, ...]) -> bool:
    return len(small) <= len(large) and large[len(large) - len(small) :] == small


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum a gradient over the leading axes a suffix-broadcast operand was expanded along."""
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead)))


class Tape:
    """
    Records primitives in creation order and runs them backwards.

    One tape serves one forward/backward pass; build a fresh tape per block.
    """

    def __init__(self, dtype: type[np.floating[Any]] | np.dtype[Any] = np.float64):
        self.dtype = np.dtype(dtype)
        self._nodes: list[Value] = []

    def __len__(self) -> int:
        return len(self._nodes)

    # --- Node creation ---

    def _record(self, data: Array, parents: tuple[Value, ...], backward: BackwardFn | None) -> Value:
        node = Value(data, parents)
        node._backward = backward
        self._nodes.append(node)
        return node

    def leaf(self, data: ArrayLike, name: str | None = None) -> Value:
        """A differentiable input (parameter or grad-check argument)."""
        node = Value(np.asarray(data, dtype=self.dtype), name=name)
        self._nodes.append(node)
        return node

    def constant(self, data: ArrayLike, name: str | None = None) -> Value:
        """An input whose gradient is never read (features, masks, targets)."""
        return self.leaf(data, name=name)

    def backward(self, loss: Value) -> None:
        """Seed d(loss)/d(loss) = 1 and propagate to every node recorded before it."""
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self._nodes):
            if node._backward is not None:
                node._backward()

    # --- Linear algebra ---

    def matmul(self, a: Value, b: Value) -> Value:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatchError("matmul", a.shape, b.shape)
        out = self._record(a.data @ b.data, (a, b), None)

        def backward() -> None:
            a.grad += out.grad @ b.data.T
            b.grad += a.data.T @ out.grad

        out._backward = backward
        return out

    def transpose(self, a: Value) -> Value:
        if a.ndim != 2:
            raise ShapeMismatchError("transpose", a.shape)
        out = self._record(a.data.T.copy(), (a,), None)

        def backward() -> None:
            a.grad += out.grad.T

        out._backward = backward
        return out

    # --- Elementwise arithmetic ---

    def _check_broadcast(self, op: str, a: Value, b: Value) -> None:
        if not (_is_suffix(b.shape, a.shape) or _is_suffix(a.shape, b.shape)):
            raise ShapeMismatchError(op, a.shape, b.shape)

    def add(self, a: Value, b: Value) -> Value:
        self._check_broadcast("add", a, b)
        out = self._record(a.data + b.data, (a, b), None)

        def backward() -> None:
            a.grad += _unbroadcast(out.grad, a.shape)
            b.grad += _unbroadcast(out.grad, b.shape)

        out._backward = backward
        return out

    def sub(self, a: Value, b: Value) -> Value:
        self._check_broadcast("sub", a, b)
        out = self._record(a.data - b.data, (a, b), None)

        def backward() -> None:
            a.grad += _unbroadcast(out.grad, a.shape)
            b.grad -= _unbroadcast(out.grad, b.shape)

        out._backward = backward
        return out

    def mul(self, a: Value, b: Value) -> Value:
        self._check_broadcast("mul", a, b)
        out = self._record(a.data * b.data, (a, b), None)

        def backward() -> None:
            a.grad += _unbroadcast(out.grad * b.data, a.shape)
            b.grad += _unbroadcast(out.grad * a.data, b.shape)

        out._backward = backward
        return out

    def scale(self, a: Value, factor: float) -> Value:
        """factor * a for a plain number."""
        out = self._record(a.data * self.dtype.type(factor), (a,), None)

        def backward() -> None:
            a.grad += out.grad * self.dtype.type(factor)

        out._backward = backward
        return out

    def affine(self, a: Value, factor: float, offset: float) -> Value:
        """factor * a + offset, e.g. 1 - p as affine(p, -1, 1)."""
        out = self._record(a.data * self.dtype.type(factor) + self.dtype.type(offset), (a,), None)

        def backward() -> None:
            a.grad += out.grad * self.dtype.type(factor)

        out._backward = backward
        return out

    # --- Nonlinearities ---

    def sigmoid(self, a: Value) -> Value:
        s = expit(a.data).astype(self.dtype, copy=False)
        out = self._record(s, (a,), None)

        def backward() -> None:
            a.grad += out.grad * s * (1 - s)

        out._backward = backward
        return out

    def tanh(self, a: Value) -> Value:
        t = np.tanh(a.data)
        out = self._record(t, (a,), None)

        def backward() -> None:
            a.grad += out.grad * (1 - t * t)

        out._backward = backward
        return out

    def relu(self, a: Value) -> Value:
        active = a.data > 0
        out = self._record(np.where(active, a.data, 0).astype(self.dtype, copy=False), (a,), None)

        def backward() -> None:
            a.grad += out.grad * active

        out._backward = backward
        return out

    def log(self, a: Value) -> Value:
        out = self._record(np.log(a.data), (a,), None)

        def backward() -> None:
            a.grad += out.grad / a.data

        out._backward = backward
        return out

    def clip(self, a: Value, low: float, high: float) -> Value:
        """Clamp to [low, high]; the gradient passes only where the input was inside the range."""
        inside = (a.data >= low) & (a.data <= high)
        out = self._record(np.clip(a.data, low, high).astype(self.dtype, copy=False), (a,), None)

        def backward() -> None:
            a.grad += out.grad * inside

        out._backward = backward
        return out

    def softmax(self, a: Value, axis: int = -1) -> Value:
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        s = e / e.sum(axis=axis, keepdims=True)
        out = self._record(s, (a,), None)

        def backward() -> None:
            g = out.grad
            a.grad += s * (g - (g * s).sum(axis=axis, keepdims=True))

        out._backward = backward
        return out

    def layer_norm(self, x: Value, gamma: Value, beta: Value, eps: float = 1e-5) -> Value:
        """Standardize over the last axis (population variance), then scale by gamma and shift by beta."""
        d = x.shape[-1]
        if gamma.shape != (d,) or beta.shape != (d,):
            raise ShapeMismatchError("layer_norm", x.shape, gamma.shape, beta.shape)
        mean = x.data.mean(axis=-1, keepdims=True)
        centered = x.data - mean
        inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + self.dtype.type(eps))
        xhat = centered * inv_std
        out = self._record(xhat * gamma.data + beta.data, (x, gamma, beta), None)

        def backward() -> None:
            g = out.grad
            gamma.grad += _unbroadcast(g * xhat, gamma.shape)
            beta.grad += _unbroadcast(g, beta.shape)
            dxhat = g * gamma.data
            x.grad += inv_std * (
                dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            )

        out._backward = backward
        return out

    # --- Structure ---

    def concat(self, values: Sequence[Value], axis: int = 0) -> Value:
        if not values:
            raise ShapeMismatchError("concat")
        try:
            data = np.concatenate([v.data for v in values], axis=axis)
        except ValueError as e:
            raise ShapeMismatchError("concat", *(v.shape for v in values)) from e
        out = self._record(data, tuple(values), None)
        bounds = np.cumsum([0] + [v.shape[axis] for v in values])

        def backward() -> None:
            for v, lo, hi in zip(values, bounds[:-1], bounds[1:], strict=True):
                index = [slice(None)] * out.ndim
                index[axis] = slice(int(lo), int(hi))
                v.grad += out.grad[tuple(index)]

        out._backward = backward
        return out

    def stack(self, values: Sequence[Value], axis: int = 0) -> Value:
        if not values or any(v.shape != values[0].shape for v in values):
            raise ShapeMismatchError("stack", *(v.shape for v in values))
        out = self._record(np.stack([v.data for v in values], axis=axis), tuple(values), None)

        def backward() -> None:
            for i, v in enumerate(values):
                v.grad += np.take(out.grad, i, axis=axis)

        out._backward = backward
        return out

    def getitem(self, a: Value, index: Any) -> Value:
        """Basic slicing (ints and slices); fancy indexing is not supported."""
        out = self._record(np.array(a.data[index], copy=True), (a,), None)

        def backward() -> None:
            a.grad[index] += out.grad

        out._backward = backward
        return out

    def reshape(self, a: Value, shape: tuple[int, ...]) -> Value:
        try:
            data = a.data.reshape(shape)
        except ValueError as e:
            raise ShapeMismatchError("reshape", a.shape, shape) from e
        out = self._record(data.copy(), (a,), None)

        def backward() -> None:
            a.grad += out.grad.reshape(a.shape)

        out._backward = backward
        return out

    def sum(self, a: Value, axis: int | None = None) -> Value:
        out = self._record(np.asarray(a.data.sum(axis=axis), dtype=self.dtype), (a,), None)

        def backward() -> None:
            g = out.grad if axis is None else np.expand_dims(out.grad, axis)
            a.grad += np.broadcast_to(g, a.shape)

        out._backward = backward
        return out

    # --- Regularization ---

    def dropout(self, x: Value, rate: float, rng: SeededRng | None, train_mode: bool) -> Value:
        """
        Inverted dropout: in train mode zero each element with probability `rate` and
        scale survivors by 1/(1-rate). Eval mode and rate 0 return `x` itself.
        """
        if not 0.0 <= rate < 1.0:
            raise RateOutOfRangeError(rate)
        if not train_mode or rate == 0.0:
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = rng.random(x.shape) >= rate
        mask = keep.astype(self.dtype) / self.dtype.type(1.0 - rate)
        return self.mul(x, self.constant(mask))
