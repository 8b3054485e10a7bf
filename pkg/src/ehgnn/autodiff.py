"""Dense 2-D tensors with reverse-mode automatic differentiation.

Every value is a float64 matrix. Operations record a backward closure on
their output when any input requires a gradient; :func:`backward` walks
that record once in reverse topological order and then frees it.
"""
from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import AutodiffError, DimensionError, MissingGradientError, UnknownOpError


class _GradMode(threading.local):
    # per thread, so concurrent no_grad blocks cannot clobber each other
    enabled = True


_grad_mode = _GradMode()

_LIVE, _FREED = 0, 1


@contextlib.contextmanager
def no_grad():
    """Disable compute-graph recording inside the block."""
    prev = _grad_mode.enabled
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward", "_state")

    def __init__(self, data, requires_grad=False):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"Tensor must be 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = "leaf"
        self._parents = ()
        self._backward = None
        self._state = _LIVE

    @classmethod
    def _result(cls, data, parents, backward, op):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        out._state = _LIVE
        if _grad_mode.enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    @classmethod
    def zeros(cls, rows, cols, requires_grad=False):
        return cls(np.zeros((rows, cols)), requires_grad=requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def T(self):
        return transpose(self)

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, _lift(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _lift(other, self))

    def __rsub__(self, other):
        return sub(_lift(other, self), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def sum(self):
        return sum_all(self)

    def mean(self):
        return mean_all(self)

    def tanh(self):
        return tanh(self)

    def relu(self):
        return relu(self)

    def backward(self):
        backward(self)


def _lift(value, like):
    if isinstance(value, Tensor):
        return value
    return Tensor(np.full(like.shape, float(value)))


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------- algebra


def matmul(a, b):
    if a.cols != b.rows:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    ad, bd = a.data, b.data

    def back(g):
        return g @ bd.T, ad.T @ g

    return Tensor._result(ad @ bd, (a, b), back, "matmul")


def add(a, b):
    """Elementwise sum; ``b`` may also be a ``1 x cols`` row broadcast over rows."""
    if a.shape == b.shape:
        return Tensor._result(a.data + b.data, (a, b), lambda g: (g, g), "add")
    if b.rows == 1 and b.cols == a.cols:
        return Tensor._result(
            a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)), "add_row"
        )
    raise DimensionError(f"add: shape mismatch {a.shape} vs {b.shape}")


def sub(a, b):
    _same_shape(a, b, "sub")
    return Tensor._result(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b):
    _same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return Tensor._result(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def scale(a, c):
    c = float(c)
    return Tensor._result(a.data * c, (a,), lambda g: (g * c,), "scale")


def transpose(a):
    return Tensor._result(a.data.T.copy(), (a,), lambda g: (g.T,), "transpose")


def tanh(a):
    y = np.tanh(a.data)
    return Tensor._result(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def relu(a):
    mask = a.data > 0
    return Tensor._result(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def sigmoid(a):
    y = 1.0 / (1.0 + np.exp(-a.data))
    return Tensor._result(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def row_softmax(a):
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return Tensor._result(y, (a,), back, "row_softmax")


_UNARY = {"tanh": tanh, "relu": relu, "sigmoid": sigmoid, "row_softmax": row_softmax}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op_tag, a, b=None):
    """Dispatch an elementwise operation by name."""
    if op_tag in _UNARY:
        if b is not None:
            raise DimensionError(f"{op_tag} takes one operand")
        return _UNARY[op_tag](a)
    if op_tag in _BINARY:
        if b is None:
            raise DimensionError(f"{op_tag} takes two operands")
        if op_tag == "add":
            _same_shape(a, b, "add")
        return _BINARY[op_tag](a, b)
    raise UnknownOpError(f"unknown elementwise op {op_tag!r}")


def sum_all(a):
    shape = a.shape
    return Tensor._result(
        np.array([[a.data.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),), "sum"
    )


def mean_all(a):
    shape = a.shape
    n = max(a.data.size, 1)
    return Tensor._result(
        np.array([[a.data.sum() / n]]), (a,), lambda g: (np.full(shape, g[0, 0] / n),), "mean"
    )


def column_mean(a):
    """Mean over rows, ``1 x cols``; an empty tensor averages to zero."""
    n = a.rows
    if n == 0:
        return Tensor._result(np.zeros((1, a.cols)), (a,), lambda g: (np.zeros(a.shape),), "colmean")
    return Tensor._result(
        a.data.mean(axis=0, keepdims=True),
        (a,),
        lambda g: (np.repeat(g / n, n, axis=0),),
        "colmean",
    )


def concat_cols(*tensors):
    rows = tensors[0].rows
    for t in tensors:
        if t.rows != rows:
            raise DimensionError(f"concat_cols: row counts differ ({t.rows} vs {rows})")
    bounds = np.cumsum([0] + [t.cols for t in tensors])

    def back(g):
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(tensors)))

    return Tensor._result(np.hstack([t.data for t in tensors]), tuple(tensors), back, "concat")


def scale_rows(a, w):
    """Multiply row ``i`` of ``a`` by ``w[i]``.

    ``w`` is either an ``rows x 1`` tensor (differentiable) or a constant
    1-D array.
    """
    if isinstance(w, Tensor):
        if w.shape != (a.rows, 1):
            raise DimensionError(f"scale_rows: weights {w.shape} do not match {a.shape}")
        ad, wd = a.data, w.data

        def back(g):
            return g * wd, (g * ad).sum(axis=1, keepdims=True)

        return Tensor._result(ad * wd, (a, w), back, "scale_rows")
    wd = np.asarray(w, dtype=np.float64).reshape(-1, 1)
    if wd.shape[0] != a.rows:
        raise DimensionError(f"scale_rows: {wd.shape[0]} weights for {a.rows} rows")
    return Tensor._result(a.data * wd, (a,), lambda g: (g * wd,), "scale_rows")


# ---------------------------------------------------------------- sparse


def _check_index(index, length, bound, op):
    index = np.asarray(index, dtype=np.int64).reshape(-1)
    if index.shape[0] != length:
        raise DimensionError(f"{op}: index has {index.shape[0]} entries, expected {length}")
    if length:
        bad = np.flatnonzero((index < 0) | (index >= bound))
        if bad.size:
            pos = int(bad[0])
            raise IndexError(f"{op}: index[{pos}] = {int(index[pos])} out of range [0, {bound})")
    return index


def gather_rows(a, index):
    index = np.asarray(index, dtype=np.int64).reshape(-1)
    if index.size:
        bad = np.flatnonzero((index < 0) | (index >= a.rows))
        if bad.size:
            pos = int(bad[0])
            raise IndexError(f"gather_rows: index[{pos}] = {int(index[pos])} out of range [0, {a.rows})")
    n = a.rows
    return Tensor._result(
        a.data[index], (a,), lambda g: (kernels.scatter_sum(g, index, n),), "gather"
    )


def scatter_aggregate(source, index, num_targets, mode="sum"):
    """Sum or average rows of ``source`` into ``num_targets`` rows by ``index``.

    Targets that receive nothing are zero for both modes.
    """
    if mode not in ("sum", "mean"):
        raise UnknownOpError(f"scatter_aggregate: unknown mode {mode!r}")
    index = _check_index(index, source.rows, num_targets, "scatter_aggregate")
    out = kernels.scatter_sum(source.data, index, num_targets)
    if mode == "sum":
        return Tensor._result(out, (source,), lambda g: (g[index],), "scatter_sum")
    counts = np.bincount(index, minlength=num_targets).astype(np.float64)
    inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)[:, None]
    out *= inv
    return Tensor._result(out, (source,), lambda g: ((g * inv)[index],), "scatter_mean")


# ---------------------------------------------------------------- losses


def mse_loss(pred, target):
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if t.shape != pred.shape:
        raise DimensionError(f"mse_loss: prediction {pred.shape} vs target {t.shape}")
    diff = pred.data - t
    n = max(diff.size, 1)
    return Tensor._result(
        np.array([[np.sum(diff * diff) / n]]),
        (pred,),
        lambda g: (g[0, 0] * 2.0 * diff / n,),
        "mse",
    )


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy of ``logits`` rows against integer ``labels``."""
    labels = _check_index(labels, logits.rows, logits.cols, "cross_entropy")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = max(logits.rows, 1)
    rows = np.arange(logits.rows)
    loss = -logp[rows, labels].sum() / n

    def back(g):
        grad = np.exp(logp)
        grad[rows, labels] -= 1.0
        return (grad * (g[0, 0] / n),)

    return Tensor._result(np.array([[loss]]), (logits,), back, "cross_entropy")


# ---------------------------------------------------------------- backward


def _topological(root):
    order, seen = [], set()
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


def backward(loss):
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``.

    Gradients accumulate into existing ``.grad`` arrays. The compute graph
    is released afterwards; calling this again on the same graph raises.
    """
    if loss.shape != (1, 1):
        raise AutodiffError(f"backward needs a 1x1 loss, got {loss.shape}")
    if loss._state == _FREED:
        raise AutodiffError("backward already ran on this graph; rebuild the forward pass")
    if not loss.requires_grad:
        raise AutodiffError("no gradient path from loss to any parameter")

    order = _topological(loss)
    for node in order:
        if node._state == _FREED:
            raise AutodiffError("graph references tensors from an already released graph")
    grads = {id(loss): np.ones((1, 1))}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg

    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
            node._state = _FREED
    loss._state = _FREED


# ---------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adam_step(state, params, grads):
    """One bias-corrected Adam update, in place on ``params``."""
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p.data) for p in params]
        state.second_moment = [np.zeros_like(p.data) for p in params]
    if len(grads) != len(params):
        raise MissingGradientError(f"{len(grads)} gradients for {len(params)} parameters")
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            raise MissingGradientError(f"parameter {i} {p.shape} has no gradient")
        if g.shape != p.shape:
            raise DimensionError(f"gradient {g.shape} does not match parameter {p.shape}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data = p.data - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)


class Adam:
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.state = AdamState(learning_rate=lr, beta1=betas[0], beta2=betas[1], epsilon=eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = np.zeros_like(p.data)

    def step(self):
        adam_step(self.state, self.params, [p.grad for p in self.params])
        # gradients are consumed by the update
        for p in self.params:
            p.grad = None


# ---------------------------------------------------------------- helpers


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out)) if fan_in + fan_out else 0.0
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True)


def gradient_check(fn, tensors, h=1e-5, seed=0):
    """Compare analytic and central-difference gradients of ``fn``.

    ``fn()`` must rebuild its output from ``tensors`` on every call. The
    output is contracted with a fixed random matrix to get a scalar.
    Returns the largest norm-wise relative error over ``tensors``.
    """
    rng = np.random.default_rng(seed)
    probe = None

    def scalar():
        nonlocal probe
        out = fn()
        if probe is None:
            probe = Tensor(rng.standard_normal(out.shape))
        return sum_all(mul(out, probe))

    for t in tensors:
        t.grad = None
    backward(scalar())

    worst = 0.0
    for t in tensors:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = np.zeros_like(t.data)
        with no_grad():
            for idx in np.ndindex(t.data.shape):
                orig = t.data[idx]
                t.data[idx] = orig + h
                up = scalar().item()
                t.data[idx] = orig - h
                down = scalar().item()
                t.data[idx] = orig
                numeric[idx] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
        worst = max(worst, np.linalg.norm(analytic - numeric) / denom)
    return worst
