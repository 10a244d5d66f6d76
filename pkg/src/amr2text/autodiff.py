"""Reverse-mode automatic differentiation over dense numpy arrays.

A ``Tensor`` wraps a float ndarray (float64, or extended precision during
finite-difference checks) together with a record of how it was produced.
Running ``backward(loss)`` on a scalar tensor walks the recording in reverse
topological order and accumulates vector-Jacobian products into ``.grad``. ``Parameter`` adds Adam moment buffers so the optimizer can update
values in place. Recordings are independent of each other; concurrent
recordings are safe as long as no two of them mutate the same Parameter.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, _parents=(), _vjp=None):
        arr = np.asarray(data)
        # keep extended precision when a finite-difference pass widened the leaves
        self.data = arr if arr.dtype == np.longdouble else arr.astype(np.float64, copy=False)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(other))

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)


class Parameter(Tensor):
    """Trainable tensor with Adam state. Frozen parameters are skipped by updates."""

    __slots__ = ("name", "frozen", "m", "v", "step")

    def __init__(self, data, name="", frozen=False):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.frozen = frozen
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0


def constant(data) -> Tensor:
    return Tensor(data)


def _record(data, parents, vjp):
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=tuple(parents), _vjp=vjp)
    return Tensor(data)


def _unbroadcast(grad, shape):
    """Sum ``grad`` over the axes that numpy broadcasting expanded."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _record(out, (a, b), vjp)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data + b.data
    except ValueError:
        raise ValueError(f"add: incompatible shapes {a.data.shape} + {b.data.shape}")

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _record(out, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data * b.data
    except ValueError:
        raise ValueError(f"mul: incompatible shapes {a.data.shape} * {b.data.shape}")

    def vjp(g):
        return _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)

    return _record(out, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data / b.data
    except ValueError:
        raise ValueError(f"div: incompatible shapes {a.data.shape} / {b.data.shape}")

    def vjp(g):
        ga = _unbroadcast(g / b.data, a.data.shape)
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)
        return ga, gb

    return _record(out, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    return _record(-a.data, (a,), lambda g: (-g,))


def add_n(tensors) -> Tensor:
    """Sum a list of same-shaped tensors."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("add_n: empty list")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise ValueError(f"add_n: mismatched shapes {shape} vs {t.data.shape}")
    out = tensors[0].data.copy()
    for t in tensors[1:]:
        out += t.data
    return _record(out, tensors, lambda g: tuple(g for _ in tensors))


def concat(tensors, axis: int) -> Tensor:
    tensors = list(tensors)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ValueError(f"concat: incompatible shapes {[t.data.shape for t in tensors]} on axis {axis}")
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _record(out, tensors, vjp)


def narrow(a: Tensor, axis: int, start: int, size: int) -> Tensor:
    """Contiguous slice of ``size`` entries along ``axis`` starting at ``start``."""
    if axis not in (0, 1) or start < 0 or start + size > a.data.shape[axis]:
        raise ValueError(f"slice: range [{start}:{start + size}) on axis {axis} outside shape {a.data.shape}")
    idx = (slice(start, start + size),) if axis == 0 else (slice(None), slice(start, start + size))
    out = a.data[idx]

    def vjp(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _record(out, (a,), vjp)


def rows(a: Tensor, indices) -> Tensor:
    """Gather rows by integer index; repeated indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.intp)
    out = a.data[idx]

    def vjp(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return (full,)

    return _record(out, (a,), vjp)


def transpose(a: Tensor) -> Tensor:
    return _record(a.data.T.copy(), (a,), lambda g: (g.T.copy(),))


def repeat_rows(a: Tensor, n: int) -> Tensor:
    """Tile a single-row tensor into ``n`` identical rows."""
    if a.data.shape[0] != 1:
        raise ValueError(f"repeat_rows: expected single row, got shape {a.data.shape}")
    out = np.repeat(a.data, n, axis=0)
    return _record(out, (a,), lambda g: (g.sum(axis=0, keepdims=True),))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid(a.data)
    return _record(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _record(out, (a,), lambda g: (g * (1.0 - out * out),))


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, row by row."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return ((g - dot) * out,)

    return _record(out, (a,), vjp)


def log(a: Tensor) -> Tensor:
    return _record(np.log(a.data), (a,), lambda g: (g / a.data,))


def tsum(a: Tensor, axis=None) -> Tensor:
    if axis is None:
        out = np.array([[a.data.sum()]])
        return _record(out, (a,), lambda g: (np.full_like(a.data, g.reshape(-1)[0]),))
    out = a.data.sum(axis=axis, keepdims=True)
    return _record(out, (a,), lambda g: (np.broadcast_to(g, a.data.shape).copy(),))


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    if axis is None:
        out = np.array([[a.data.mean()]])
        return _record(out, (a,), lambda g: (np.full_like(a.data, g.reshape(-1)[0] / n),))
    out = a.data.mean(axis=axis, keepdims=True)
    return _record(out, (a,), lambda g: (np.broadcast_to(g / n, a.data.shape).copy(),))


def pick(a: Tensor, col: int) -> Tensor:
    """Select one entry from a single-row tensor, keeping it a (1, 1) scalar."""
    if a.data.shape[0] != 1 or not (0 <= col < a.data.shape[1]):
        raise ValueError(f"pick: column {col} outside shape {a.data.shape}")
    out = a.data[:, col : col + 1].copy()

    def vjp(g):
        full = np.zeros_like(a.data)
        full[0, col] = g[0, 0]
        return (full,)

    return _record(out, (a,), vjp)


def dropout(a: Tensor, rate: float, rng=None, mask=None) -> Tensor:
    """Inverted dropout: zero entries with probability ``rate``, scale the rest by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout: rate {rate} outside [0, 1)")
    if rate == 0.0 and mask is None:
        return a
    if mask is None:
        mask = (rng.random(a.data.shape) >= rate).astype(np.float64)
    scale = 1.0 / (1.0 - rate)
    out = a.data * mask * scale
    return _record(out, (a,), lambda g: (g * mask * scale,))


def _topo_order(root: Tensor):
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every tensor reachable from ``loss``.

    Repeated calls keep accumulating until grads are cleared with ``zero_grad``.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.data) if loss.grad is None else loss.grad + np.ones_like(loss.data)
    for node in reversed(order):
        if node._vjp is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if not parent.requires_grad or g is None:
                continue
            parent.grad = g.copy() if parent.grad is None else parent.grad + g


def zero_grad(params) -> None:
    for p in params:
        p.grad = None


def finite_diff_report(fn, params, eps: float = 1e-5, analytic=None) -> dict:
    """Max relative error between analytic and central-difference gradients, per parameter.

    ``fn`` must rebuild the scalar loss from scratch on every call with dropout
    disabled. When ``analytic`` is given (a dict mapping parameter to gradient
    array) it is checked instead of running ``backward``; this supports
    negative tests with deliberately wrong gradients.

    The numeric side runs with parameters cast to extended precision so that
    the difference quotient stays trustworthy near 1e-12; float64 rounding of
    the loss (about 1e-10 after division by 2*eps) would otherwise swamp the
    comparison on entries whose true gradient is close to zero.
    """
    params = list(params)
    if analytic is None:
        zero_grad(params)
        backward(fn())
        analytic = {id(p): (p.grad if p.grad is not None else np.zeros_like(p.data)) for p in params}
    else:
        analytic = {id(p): g for p, g in analytic.items()}
    saved_data = [p.data for p in params]
    for p in params:
        p.data = p.data.astype(np.longdouble)
    wide_eps = np.longdouble(eps)
    try:
        report = {}
        for k, p in enumerate(params):
            flat = p.data.reshape(-1)
            ga = analytic[id(p)].reshape(-1)
            worst = 0.0
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + wide_eps
                up = fn().data.reshape(-1)[0]
                flat[i] = saved - wide_eps
                down = fn().data.reshape(-1)[0]
                flat[i] = saved
                numeric = float((up - down) / (2 * wide_eps))
                err = abs(ga[i] - numeric) / max(1e-8, abs(ga[i]) + abs(numeric))
                worst = max(worst, err)
            report[p.name or f"param{k}"] = worst
    finally:
        for p, data in zip(params, saved_data):
            p.data = data
    return report


def finite_diff_check(fn, params, eps: float = 1e-5, analytic=None) -> float:
    """Max relative error over all entries of all ``params``; see ``finite_diff_report``."""
    report = finite_diff_report(fn, params, eps=eps, analytic=analytic)
    return max(report.values()) if report else 0.0
