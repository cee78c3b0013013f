"""Eager reverse-mode automatic differentiation over numpy arrays.

Every primitive records its parents and a closure that maps the output
gradient to parent gradients. ``Tensor.backward`` walks the tape in reverse
topological order. Gradient recording can be switched off with ``no_grad``
for inference, in which case primitives only compute values.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

NEG_SENTINEL = -1e9

_grad_enabled = True


class NonScalarLoss(ValueError):
    pass


class ShapeError(ValueError):
    pass


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise NonScalarLoss(f"backward() needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                # leaf
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not supported")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def _value(x):
    if isinstance(x, Tensor):
        return x.data
    if isinstance(x, (int, float)):
        # python scalars stay weakly typed so float32 graphs are not upcast
        return x
    return np.asarray(x)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def _make(data: np.ndarray, parents: Iterable, backward) -> Tensor:
    parents = tuple(p for p in parents)
    out = Tensor(data)
    if _grad_enabled and any(isinstance(p, Tensor) and p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p if isinstance(p, Tensor) else Tensor(p) for p in parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# elementwise arithmetic -----------------------------------------------------

def add(a, b) -> Tensor:
    av, bv = _value(a), _value(b)
    out = np.asarray(av + bv)
    return _make(out, (a, b), lambda g: (_unbroadcast(g, np.shape(av)), _unbroadcast(g, np.shape(bv))))


def sub(a, b) -> Tensor:
    av, bv = _value(a), _value(b)
    out = np.asarray(av - bv)
    return _make(out, (a, b), lambda g: (_unbroadcast(g, np.shape(av)), _unbroadcast(-g, np.shape(bv))))


def mul(a, b) -> Tensor:
    av, bv = _value(a), _value(b)
    out = np.asarray(av * bv)
    return _make(out, (a, b),
                 lambda g: (_unbroadcast(g * bv, np.shape(av)), _unbroadcast(g * av, np.shape(bv))))


def matmul(a, b) -> Tensor:
    """``np.matmul`` semantics, including batch broadcasting.

    1-d operands are not supported; reshape them to a row or column first.
    """
    av, bv = _value(a), _value(b)
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError("matmul operands must be at least 2-d")
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"matmul shape mismatch {av.shape} @ {bv.shape}")
    out = av @ bv

    def backward(g):
        ga = g @ np.swapaxes(bv, -1, -2)
        gb = np.swapaxes(av, -1, -2) @ g
        return _unbroadcast(ga, av.shape), _unbroadcast(gb, bv.shape)

    return _make(out, (a, b), backward)


def tanh(x) -> Tensor:
    y = np.tanh(_value(x))
    return _make(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x) -> Tensor:
    xv = _value(x)
    y = 0.5 * (1.0 + np.tanh(0.5 * xv))
    return _make(y, (x,), lambda g: (g * y * (1.0 - y),))


def relu(x) -> Tensor:
    xv = _value(x)
    pos = xv > 0
    return _make(np.where(pos, xv, 0.0).astype(xv.dtype), (x,), lambda g: (g * pos,))


def exp(x) -> Tensor:
    y = np.exp(_value(x))
    return _make(y, (x,), lambda g: (g * y,))


def log(x) -> Tensor:
    xv = _value(x)
    return _make(np.log(xv), (x,), lambda g: (g / xv,))


# reductions and shape ops ---------------------------------------------------

def sum_(x, axis=None, keepdims=False) -> Tensor:
    xv = _value(x)
    out = xv.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xv.shape).copy(),)

    return _make(np.asarray(out), (x,), backward)


def mean(x, axis=None, keepdims=False) -> Tensor:
    xv = _value(x)
    count = xv.size if axis is None else np.prod([xv.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum_(x, axis, keepdims), 1.0 / count)


def reshape(x, shape) -> Tensor:
    xv = _value(x)
    return _make(xv.reshape(shape), (x,), lambda g: (g.reshape(xv.shape),))


def transpose(x, axes=None) -> Tensor:
    xv = _value(x)
    out = np.transpose(xv, axes)
    inv = None if axes is None else np.argsort(axes)
    return _make(out, (x,), lambda g: (np.transpose(g, inv),))


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    vals = [_value(x) for x in xs]
    out = np.concatenate(vals, axis=axis)
    sizes = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def backward(g):
        return tuple(np.split(g, sizes, axis=axis))

    return _make(out, tuple(xs), backward)


def _is_advanced(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def getitem(x, index) -> Tensor:
    xv = _value(x)
    out = xv[index]

    advanced = _is_advanced(index)

    def backward(g):
        full = np.zeros_like(xv)
        if advanced:
            np.add.at(full, index, g)
        else:
            full[index] = g
        return (full,)

    return _make(np.array(out), (x,), backward)


def masked_fill(x, keep: np.ndarray, value: float) -> Tensor:
    """Entries where ``keep`` is False are replaced by ``value`` (no gradient)."""
    xv = _value(x)
    keep = np.broadcast_to(keep, xv.shape)
    out = np.where(keep, xv, np.asarray(value, dtype=xv.dtype))
    return _make(out, (x,), lambda g: (g * keep,))


# normalisations ---------------------------------------------------------------

def softmax(x, axis: int = -1) -> Tensor:
    xv = _value(x)
    z = xv - xv.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make(y, (x,), backward)


def log_softmax(x, axis: int = -1) -> Tensor:
    xv = _value(x)
    z = xv - xv.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def backward(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return _make(y, (x,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then scale by ``gain`` and shift by ``bias``."""
    xv, gv, bv = _value(x), _value(gain), _value(bias)
    mu = xv.mean(axis=-1, keepdims=True)
    xc = xv - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gv + bv

    def backward(g):
        gxhat = g * gv
        gx = inv * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _make(out, (x, gain, bias), backward)
