"""Reverse-mode autodiff over float64 numpy arrays.

Each op returns a new ``Tensor`` holding the result, the parent nodes,
and a closure that maps the output gradient onto the parents.  Gradients
accumulate with ``+=`` so shared subgraphs are handled naturally.
"""

from __future__ import annotations

import contextlib

import numpy as np

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A float64 array plus its gradient and graph bookkeeping."""

    __slots__ = ("data", "grad", "_parents", "_backward", "op")

    def __init__(self, data, parents=(), backward=None, op="leaf"):
        self.data = np.array(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self._parents = tuple(parents) if _grad_enabled else ()
        self._backward = backward if _grad_enabled else None
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"


def _result(data, parents, backward, op):
    if not _grad_enabled:
        return Tensor(data, op=op)
    return Tensor(data, parents=parents, backward=backward, op=op)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` along the axes numpy broadcast it over."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul needs 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward(grad):
        a.grad += grad @ b.data.T
        b.grad += a.data.T @ grad

    return _result(out_data, (a, b), backward, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(grad):
        a.grad += _unbroadcast(grad, a.data.shape)
        b.grad += _unbroadcast(grad, b.data.shape)

    return _result(out_data, (a, b), backward, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(grad):
        a.grad += _unbroadcast(grad * b.data, a.data.shape)
        b.grad += _unbroadcast(grad * a.data, b.data.shape)

    return _result(out_data, (a, b), backward, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out_data = a.data * c

    def backward(grad):
        a.grad += grad * c

    return _result(out_data, (a,), backward, "scale")


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError(f"transpose needs a 2-D operand, got shape {a.data.shape}")
    out_data = a.data.T.copy()

    def backward(grad):
        a.grad += grad.T

    return _result(out_data, (a,), backward, "transpose")


def concat(parts, axis: int = 1) -> Tensor:
    parts = tuple(parts)
    if not parts:
        raise ValueError("concat needs at least one tensor")
    if axis not in (0, 1):
        raise ValueError(f"concat supports axis 0 or 1, got {axis}")
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if axis == 0:
                p.grad += grad[lo:hi, :]
            else:
                p.grad += grad[:, lo:hi]

    return _result(out_data, parts, backward, "concat")


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)
    out_data = a.data.reshape(shape)

    def backward(grad):
        a.grad += grad.reshape(a.data.shape)

    return _result(out_data, (a,), backward, "reshape")


def abs_(a: Tensor) -> Tensor:
    out_data = np.abs(a.data)

    def backward(grad):
        # subgradient 0 at the kink
        a.grad += grad * np.sign(a.data)

    return _result(out_data, (a,), backward, "abs")


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward(grad):
        a.grad += grad * (a.data > 0.0)

    return _result(out_data, (a,), backward, "relu")


def elu(a: Tensor) -> Tensor:
    pos = a.data > 0.0
    expm1 = np.expm1(a.data)
    out_data = np.where(pos, a.data, expm1)

    def backward(grad):
        a.grad += grad * np.where(pos, 1.0, expm1 + 1.0)

    return _result(out_data, (a,), backward, "elu")


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(grad):
        y = out_data
        a.grad += y * (grad - (grad * y).sum(axis=-1, keepdims=True))

    return _result(out_data, (a,), backward, "softmax")


def mean_squared_error(pred: Tensor, target: Tensor) -> Tensor:
    if pred.data.shape != target.data.shape:
        raise ValueError(
            f"shape mismatch: prediction {pred.data.shape} vs target {target.data.shape}"
        )
    diff = pred.data - target.data
    n = diff.size
    out_data = np.array((diff * diff).sum() / n)

    def backward(grad):
        g = grad * (2.0 / n) * diff
        pred.grad += g
        target.grad -= g

    return _result(out_data, (pred, target), backward, "mse")


def backward(loss: Tensor, seed=None):
    """Accumulate d(loss)/d(node) into every ``grad`` reachable from ``loss``.

    ``seed`` overrides the root gradient (defaults to ones), which lets a
    caller inject an externally computed gradient at a non-scalar node.
    """
    if seed is None:
        seed = np.ones_like(loss.data)
    else:
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != loss.data.shape:
            raise ValueError(
                f"seed shape {seed.shape} does not match node shape {loss.data.shape}"
            )

    # iterative post-order topological sort
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))

    loss.grad = loss.grad + seed
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)
