"""Minimal reverse-mode autodiff over dense float64 numpy arrays.

Only the operations the pipeline needs are provided: affine layers, relu,
softmax, sigmoid, elementwise min/max (gradient routed to the selected
argument, first argument on ties), where, clip, indexing, reductions and
binary cross-entropy.  The `f*` helpers at the bottom accept either
Tensors or plain arrays and return the matching kind, so the evaluation
and refinement code runs identically with and without gradients.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

ArrayLike = Union["Tensor", np.ndarray, float, int]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverse of numpy broadcasting)."""
    grad = np.asarray(grad, dtype=np.float64)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    # -- graph traversal ----------------------------------------------------

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without seed needs a scalar output")
            seed = np.ones_like(self.data)
        topo: list[Tensor] = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.asarray(seed, dtype=np.float64)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + grad

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)

        def bwd(g):
            self._accumulate(_unbroadcast(g, self.data.shape))
            other._accumulate(_unbroadcast(g, other.data.shape))
        return Tensor(self.data + other.data, parents=(self, other), backward=bwd)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        def bwd(g):
            self._accumulate(-g)
        return Tensor(-self.data, parents=(self,), backward=bwd)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other) + (-self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)

        def bwd(g):
            self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            other._accumulate(_unbroadcast(g * self.data, other.data.shape))
        return Tensor(self.data * other.data, parents=(self, other), backward=bwd)

    __rmul__ = __mul__

    def __truediv__(self, other: Union[float, int]) -> "Tensor":
        return self * (1.0 / float(other))

    def matmul(self, other: "Tensor") -> "Tensor":
        other = as_tensor(other)

        def bwd(g):
            self._accumulate(g @ other.data.T)
            other._accumulate(self.data.T @ g)
        return Tensor(self.data @ other.data, parents=(self, other), backward=bwd)

    def __matmul__(self, other):
        return self.matmul(other)

    # -- shape --------------------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        old = self.data.shape

        def bwd(g):
            self._accumulate(g.reshape(old))
        return Tensor(self.data.reshape(*shape), parents=(self,), backward=bwd)

    def __getitem__(self, key) -> "Tensor":
        def bwd(g):
            full = np.zeros_like(self.data)
            np.add.at(full, key, g)
            self._accumulate(full)
        return Tensor(self.data[key], parents=(self,), backward=bwd)

    # -- nonlinearities -----------------------------------------------------

    def relu(self) -> "Tensor":
        mask = self.data > 0

        def bwd(g):
            self._accumulate(g * mask)
        return Tensor(self.data * mask, parents=(self,), backward=bwd)

    def sigmoid(self) -> "Tensor":
        out = 1.0 / (1.0 + np.exp(-self.data))

        def bwd(g):
            self._accumulate(g * out * (1.0 - out))
        return Tensor(out, parents=(self,), backward=bwd)

    def softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=axis, keepdims=True)

        def bwd(g):
            dot = (g * out).sum(axis=axis, keepdims=True)
            self._accumulate(out * (g - dot))
        return Tensor(out, parents=(self,), backward=bwd)

    def log(self) -> "Tensor":
        def bwd(g):
            self._accumulate(g / self.data)
        return Tensor(np.log(self.data), parents=(self,), backward=bwd)

    def clip(self, lo: float, hi: float) -> "Tensor":
        mask = (self.data >= lo) & (self.data <= hi)

        def bwd(g):
            self._accumulate(g * mask)
        return Tensor(np.clip(self.data, lo, hi), parents=(self,), backward=bwd)

    # -- reductions ---------------------------------------------------------

    def sum(self, axis=None) -> "Tensor":
        shape = self.data.shape

        def bwd(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g, shape).copy())
            else:
                self._accumulate(np.broadcast_to(
                    np.expand_dims(g, axis), shape).copy())
        return Tensor(self.data.sum(axis=axis), parents=(self,), backward=bwd)

    def mean(self, axis=None) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) / count


def as_tensor(x: ArrayLike) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def parameter(data, rng: Optional[np.random.Generator] = None) -> Tensor:
    return Tensor(data, requires_grad=True)


# -- selection ops ----------------------------------------------------------

def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; on ties the gradient goes to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    mask = a.data >= b.data

    def bwd(g):
        a._accumulate(_unbroadcast(g * mask, a.data.shape))
        b._accumulate(_unbroadcast(g * ~mask, b.data.shape))
    return Tensor(np.maximum(a.data, b.data), parents=(a, b), backward=bwd)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; on ties the gradient goes to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    mask = a.data <= b.data

    def bwd(g):
        a._accumulate(_unbroadcast(g * mask, a.data.shape))
        b._accumulate(_unbroadcast(g * ~mask, b.data.shape))
    return Tensor(np.minimum(a.data, b.data), parents=(a, b), backward=bwd)


def where(cond: np.ndarray, a: ArrayLike, b: ArrayLike) -> Tensor:
    cond = np.asarray(cond, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        a._accumulate(_unbroadcast(g * cond, a.data.shape))
        b._accumulate(_unbroadcast(g * ~cond, b.data.shape))
    return Tensor(np.where(cond, a.data, b.data), parents=(a, b), backward=bwd)


def binary_cross_entropy(pred: Tensor, target: ArrayLike,
                         eps: float = 1e-7) -> Tensor:
    """Mean BCE; predictions are clipped into [eps, 1-eps] before the log."""
    pred = as_tensor(pred).clip(eps, 1.0 - eps)
    target = as_tensor(target)
    loss = -(target * pred.log() + (1.0 - target) * (1.0 - pred).log())
    return loss.mean()


# -- kind-preserving helpers (Tensor in -> Tensor out, array -> array) ------

def _any_tensor(*args) -> bool:
    return any(isinstance(a, Tensor) for a in args)


def fmin(a, b):
    if _any_tensor(a, b):
        return minimum(a, b)
    return np.minimum(a, b)


def fmax(a, b):
    if _any_tensor(a, b):
        return maximum(a, b)
    return np.maximum(a, b)


def fwhere(cond, a, b):
    if _any_tensor(a, b):
        return where(cond, a, b)
    return np.where(cond, a, b)


def fneg(x):
    """Fuzzy negation 1 - x."""
    if isinstance(x, Tensor):
        return 1.0 - x
    return 1.0 - np.asarray(x)


def fclip01(x):
    if isinstance(x, Tensor):
        return x.clip(0.0, 1.0)
    return np.clip(x, 0.0, 1.0)


def fdata(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def fmean(values: Sequence):
    if _any_tensor(*values):
        tensors = [as_tensor(v) for v in values]
        total = tensors[0]
        for v in tensors[1:]:
            total = total + v
        return total / len(values)
    return np.mean(np.stack([np.asarray(v) for v in values]), axis=0)
