"""Reverse-mode differentiation over numpy arrays.

A :class:`Tensor` holds a value array, a gradient array of the same shape and
the closure that pushes its gradient back to the tensors it was computed from.
Only the op set the recommender needs is provided.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not satisfy an op's contract."""


class DomainError(ValueError):
    """An op was asked to evaluate outside its mathematical domain."""


_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Evaluate ops without recording them on the tape."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "_grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else None)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self._grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.op = "leaf"

    # -- bookkeeping ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    @property
    def grad(self) -> np.ndarray:
        """Accumulated gradient; zeros until something flows in."""
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value) -> None:
        self._grad = None if value is None else np.asarray(value)

    def zero_grad(self) -> None:
        self._grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        backward(self)

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype if dtype is not None else np.float64))


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(np.asarray(b, dtype=a.dtype))
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(np.asarray(a, dtype=b.dtype)), b
    return as_tensor(a), as_tensor(b)


def _result(data: np.ndarray, parents: Sequence[Tensor], op: str,
            backward_fn: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(data)
    out.op = op
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        # Grads are never mutated in place, so aliasing ``g`` is safe.
        g = np.asarray(g, dtype=t.dtype)
        t._grad = g if t._grad is None else t._grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# -- elementwise binary ------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("add", a, b)

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _result(a.data + b.data, (a, b), "add", bw)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("sub", a, b)

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _result(a.data - b.data, (a, b), "sub", bw)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("mul", a, b)
    ad, bd = a.data, b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * bd, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * ad, b.shape))

    return _result(ad * bd, (a, b), "mul", bw)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("div", a, b)
    if np.any(b.data == 0):
        raise DomainError("div: division by zero")
    ad, bd = a.data, b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g / bd, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g * ad / (bd * bd), b.shape))

    return _result(ad / bd, (a, b), "div", bw)


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    ad = a.data

    def bw(g):
        _accumulate(a, g * exponent * ad ** (exponent - 1))

    return _result(ad ** exponent, (a,), "pow", bw)


def square(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data

    def bw(g):
        _accumulate(a, 2.0 * g * ad)

    return _result(ad * ad, (a,), "square", bw)


def matmul(a, b) -> Tensor:
    """Matrix product with numpy batching rules; ``b`` may be 2-D and shared."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    ad, bd = a.data, b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g @ np.swapaxes(bd, -1, -2), a.shape))
        if b.requires_grad:
            if ad.ndim == 2:
                gb = ad.T @ g
            else:
                gb = np.swapaxes(ad, -1, -2) @ g
            _accumulate(b, _unbroadcast(gb, b.shape))

    return _result(ad @ bd, (a, b), "matmul", bw)


# -- elementwise unary -------------------------------------------------

def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0

    def bw(g):
        _accumulate(x, g * mask)

    return _result(np.maximum(x.data, 0.0).astype(x.dtype, copy=False), (x,), "relu", bw)


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)

    def bw(g):
        _accumulate(x, g * out)

    return _result(out, (x,), "exp", bw)


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise DomainError("log: argument must be strictly positive")
    xd = x.data

    def bw(g):
        _accumulate(x, g / xd)

    return _result(np.log(xd), (x,), "log", bw)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    xd = x.data
    out = np.empty_like(xd)
    pos = xd >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    ez = np.exp(xd[~pos])
    out[~pos] = ez / (1.0 + ez)

    def bw(g):
        _accumulate(x, g * out * (1.0 - out))

    return _result(out, (x,), "sigmoid", bw)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)

    def bw(g):
        _accumulate(x, g * (1.0 - out * out))

    return _result(out, (x,), "tanh", bw)


# -- reductions and shape ----------------------------------------------

def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum_(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _norm_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        _accumulate(x, np.broadcast_to(g, x.shape))

    return _result(np.asarray(out), (x,), "sum", bw)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _norm_axes(axis, x.ndim)
    n = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    if n == 0:
        raise ShapeError(f"mean: empty reduction over shape {x.shape}")
    out = x.data.mean(axis=axes, keepdims=keepdims)

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        _accumulate(x, np.broadcast_to(g / n, x.shape))

    return _result(np.asarray(out), (x,), "mean", bw)


def logsumexp(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    s = e.sum(axis=axis, keepdims=True)
    out = (np.log(s) + m).squeeze(axis)
    soft = e / s

    def bw(g):
        _accumulate(x, np.expand_dims(g, axis) * soft)

    return _result(out, (x,), "logsumexp", bw)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {x.shape} to {tuple(shape)}") from None

    def bw(g):
        _accumulate(x, g.reshape(x.shape))

    return _result(out, (x,), "reshape", bw)


def getitem(x, index) -> Tensor:
    """Basic and advanced indexing; repeated indices accumulate on backward."""
    x = as_tensor(x)
    out = x.data[index]

    basic = not any(isinstance(i, (list, np.ndarray, Tensor))
                    for i in (index if isinstance(index, tuple) else (index,)))

    def bw(g):
        full = np.zeros_like(x.data)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        _accumulate(x, full)

    return _result(np.array(out, copy=True), (x,), "getitem", bw)


def take(x, indices) -> Tensor:
    """Gather rows of ``x`` (embedding lookup when ``x`` is a table)."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ShapeError(f"take: index out of range for leading axis of shape {x.shape}")
    out = x.data[idx]

    def bw(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        _accumulate(x, full)

    return _result(out, (x,), "take", bw)


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    sizes = [t.shape[axis] for t in ts]
    bounds = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(ts, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _accumulate(t, g[tuple(sl)])

    return _result(out, ts, "concat", bw)


# -- composite primitives with closed-form gradients -----------------

def cosine_sim(a, b, axis: int = -1, eps: float | None = None) -> Tensor:
    """Cosine similarity along ``axis`` with broadcasting.

    With ``eps=None`` a zero-norm operand raises :class:`DomainError`;
    otherwise norms are floored at ``eps``.
    """
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("cosine_sim", a, b)
    ad, bd = a.data, b.data
    na = np.sqrt((ad * ad).sum(axis=axis, keepdims=True))
    nb = np.sqrt((bd * bd).sum(axis=axis, keepdims=True))
    if eps is None:
        if np.any(na == 0) or np.any(nb == 0):
            raise DomainError("cosine_sim: zero-norm vector")
    else:
        na = np.maximum(na, eps)
        nb = np.maximum(nb, eps)
    dot = (ad * bd).sum(axis=axis, keepdims=True)
    cos = dot / (na * nb)

    def bw(g):
        g = np.expand_dims(g, axis)
        if a.requires_grad:
            ga = g * (bd / (na * nb) - cos * ad / (na * na))
            _accumulate(a, _unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = g * (ad / (na * nb) - cos * bd / (nb * nb))
            _accumulate(b, _unbroadcast(gb, b.shape))

    return _result(np.squeeze(cos, axis=axis), (a, b), "cosine_sim", bw)


def dropout(x, rate: float, rng: np.random.Generator, training: bool = True) -> Tensor:
    """Inverted dropout: survivors are scaled by ``1/(1-rate)``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout: rate must lie in [0, 1), got {rate}")
    x = as_tensor(x)
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)

    def bw(g):
        _accumulate(x, g * keep)

    return _result(x.data * keep, (x,), "dropout", bw)


def mse(a, b, axis=None) -> Tensor:
    """Mean squared error; ``axis=None`` averages everything to a scalar."""
    a, b = _pair(a, b)
    shape = _broadcast_shape("mse", a, b)
    diff = a.data - b.data
    axes = _norm_axes(axis, len(shape))
    n = int(np.prod([shape[ax] for ax in axes])) if axes else 1
    out = (diff * diff).sum(axis=axes) / n

    def bw(g):
        g = np.expand_dims(g, axes)
        ga = 2.0 * diff * g / n
        if a.requires_grad:
            _accumulate(a, _unbroadcast(ga, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-ga, b.shape))

    return _result(np.asarray(out), (a, b), "mse", bw)


def binary_cross_entropy(p, y, eps: float = 1e-7) -> Tensor:
    """Mean of ``-[y log p + (1-y) log(1-p)]`` with ``p`` clamped to ``[eps, 1-eps]``."""
    p = as_tensor(p)
    yd = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=p.dtype)
    if yd.shape != p.shape:
        raise ShapeError(f"binary_cross_entropy: shapes {p.shape} and {yd.shape}")
    pc = np.clip(p.data, eps, 1.0 - eps)
    inside = (p.data > eps) & (p.data < 1.0 - eps)
    n = max(p.size, 1)
    out = -(yd * np.log(pc) + (1.0 - yd) * np.log(1.0 - pc)).sum() / n

    def bw(g):
        _accumulate(p, g * inside * (-yd / pc + (1.0 - yd) / (1.0 - pc)) / n)

    return _result(np.asarray(out), (p,), "bce", bw)


# -- backward ---------------------------------------------------------

def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(t) into ``t.grad`` for every tensor reachable from ``root``.

    Leaf gradients accumulate across calls; intermediate gradients are
    recomputed on each call.
    ``requires_grad`` is read during this pass, not when the graph was recorded.
    """
    if root.size != 1:
        raise ShapeError(f"backward: root must be scalar, got shape {root.shape}")
    if not root.requires_grad:
        return
    order = _topo(root)
    for node in order:
        if node._parents:
            node._grad = None
    _accumulate(root, np.ones_like(root.data))
    for node in reversed(order):
        if node._backward is not None and node._grad is not None:
            node._backward(node._grad)
