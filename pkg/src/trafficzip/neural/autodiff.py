"""Minimal reverse-mode autodiff over numpy arrays.

Just enough machinery for gated recurrent cells, MLPs, sum aggregation over a
fixed adjacency, and the Laplace likelihood: elementwise arithmetic with
broadcasting, matmul against 2-D weights, a few smooth nonlinearities, concat
and last-axis selection, and reductions. Gradients accumulate in reverse
topological order, so shared subgraphs are handled correctly.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph construction (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] > 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator plumbing ------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _make(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def _accumulate(t: Tensor, grad: np.ndarray):
    # always copy on first write: grad may alias another node's gradient
    if t.grad is None:
        t.grad = np.array(grad, dtype=np.float64)
    else:
        t.grad += grad


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(data, (a, b), backward)


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), backward)


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(data, (a, b), backward)


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    data = np.matmul(a.data, b.data)

    def backward(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            _accumulate(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            _accumulate(b, _unbroadcast(gb, b.data.shape))

    return _make(data, (a, b), backward)


def tanh(x):
    x = _wrap(x)
    data = np.tanh(x.data)

    def backward(g):
        _accumulate(x, g * (1.0 - data * data))

    return _make(data, (x,), backward)


def sigmoid(x):
    x = _wrap(x)
    data = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g):
        _accumulate(x, g * data * (1.0 - data))

    return _make(data, (x,), backward)


def softplus(x):
    x = _wrap(x)
    data = np.logaddexp(0.0, x.data)

    def backward(g):
        _accumulate(x, g / (1.0 + np.exp(-x.data)))

    return _make(data, (x,), backward)


def log(x):
    x = _wrap(x)
    data = np.log(x.data)

    def backward(g):
        _accumulate(x, g / x.data)

    return _make(data, (x,), backward)


def absolute(x):
    x = _wrap(x)
    data = np.abs(x.data)

    def backward(g):
        _accumulate(x, g * np.sign(x.data))

    return _make(data, (x,), backward)


def maximum(x, floor: float):
    """Elementwise max with a constant; gradient flows where x >= floor."""
    x = _wrap(x)
    data = np.maximum(x.data, floor)

    def backward(g):
        _accumulate(x, g * (x.data >= floor))

    return _make(data, (x,), backward)


def concat(tensors, axis=-1):
    tensors = [_wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        pieces = np.split(g, splits, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                _accumulate(t, piece)

    return _make(data, tuple(tensors), backward)


def take_last(x, index: int):
    """Select one slice along the last axis (keeps the axis off)."""
    x = _wrap(x)
    data = x.data[..., index]

    def backward(g):
        full = np.zeros_like(x.data)
        full[..., index] = g
        _accumulate(x, full)

    return _make(data, (x,), backward)


def total(x):
    """Sum of all elements (scalar Tensor)."""
    x = _wrap(x)
    data = np.asarray(x.data.sum())

    def backward(g):
        _accumulate(x, np.broadcast_to(g, x.data.shape).astype(np.float64))

    return _make(data, (x,), backward)


def mean(x):
    x = _wrap(x)
    n = x.data.size
    data = np.asarray(x.data.sum() / n)

    def backward(g):
        _accumulate(x, np.broadcast_to(g / n, x.data.shape).astype(np.float64))

    return _make(data, (x,), backward)
