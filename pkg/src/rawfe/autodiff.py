"""Minimal reverse-mode differentiation over numpy arrays.

Only the operations the front-ends need are implemented: strided valid
1-D convolution, GELU, magnitude, normalization arithmetic, matmul, the
log compression, and reductions.  Tensors record a backward closure only
while some input requires a gradient, so inference passes build no graph.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from rawfe.errors import InputTooShort, NoGraph

NORM_EPS = 1e-5  # variance floor inside group/layer normalization


class Tensor:
    """A numpy array plus an optional backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._backward = None
        self._prev = ()

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn) -> Tensor:
    """Result tensor; records the closure only if a parent wants gradients."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._prev = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g, dtype=np.float64)
    else:
        t.grad = t.grad + g


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def backward(loss: Tensor):
    """Populate .grad for every requires_grad tensor reachable from a scalar loss.

    The recorded graph is released afterwards.

    Raises:
        NoGraph: loss has no recorded computation behind it.
    """
    if loss.data.size != 1:
        raise NoGraph("backward() needs a scalar loss")
    if not loss.requires_grad or loss._backward is None:
        raise NoGraph("loss was not produced by a recorded forward pass")

    topo, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._prev:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
        node._backward = None
        node._prev = ()


# --- arithmetic ---

def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def back(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def back(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), back)


def neg(a) -> Tensor:
    a = _lift(a)

    def back(g):
        if a.requires_grad:
            _accumulate(a, -g)

    return _make(-a.data, (a,), back)


def sub(a, b) -> Tensor:
    return add(a, neg(b))


def pow_const(a, p: float) -> Tensor:
    """a ** p for a constant exponent; a must stay positive for fractional p."""
    a = _lift(a)
    val = a.data ** p

    def back(g):
        if a.requires_grad:
            _accumulate(a, g * p * a.data ** (p - 1.0))

    return _make(val, (a,), back)


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def back(g):
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    return _make(a.data @ b.data, (a, b), back)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)

    def back(g):
        if not a.requires_grad:
            return
        if axis is None:
            _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), back)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    if axis is None:
        n = a.data.size
    else:
        n = a.data.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def transpose(a) -> Tensor:
    a = _lift(a)

    def back(g):
        if a.requires_grad:
            _accumulate(a, g.T)

    return _make(a.data.T, (a,), back)


def reshape(a, shape) -> Tensor:
    a = _lift(a)

    def back(g):
        if a.requires_grad:
            _accumulate(a, g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), back)


def slice_rows(a, n: int) -> Tensor:
    """First n rows of a 2-D tensor."""
    a = _lift(a)

    def back(g):
        if a.requires_grad:
            gx = np.zeros_like(a.data)
            gx[:n] = g
            _accumulate(a, gx)

    return _make(a.data[:n], (a,), back)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                _accumulate(t, piece)

    return _make(np.concatenate([t.data for t in tensors], axis=axis),
                 tuple(tensors), back)


# --- nonlinearities ---

def abs_(a) -> Tensor:
    """|a|; the subgradient at 0 is taken as 0."""
    a = _lift(a)

    def back(g):
        if a.requires_grad:
            _accumulate(a, g * np.sign(a.data))

    return _make(np.abs(a.data), (a,), back)


def gelu(a) -> Tensor:
    """Exact-erf GELU: 0.5 * x * (1 + erf(x / sqrt(2)))."""
    a = _lift(a)
    x = a.data
    phi = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))

    def back(g):
        if a.requires_grad:
            pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
            _accumulate(a, g * (phi + x * pdf))

    return _make(x * phi, (a,), back)


def log10_hypot_eps(a, eps: float) -> Tensor:
    """Smooth magnitude compression: 0.5 * log10(a^2 + eps^2).

    Matches log10(|a| + eps) away from zero and equals log10(eps) at zero,
    but stays differentiable with the gradient bounded by 1/(2*eps*ln 10).
    """
    a = _lift(a)
    sq = a.data * a.data + eps * eps

    def back(g):
        if a.requires_grad:
            _accumulate(a, g * a.data / (sq * np.log(10.0)))

    return _make(0.5 * np.log10(sq), (a,), back)


# --- convolutions (valid, strided, bias-free) ---

def _strided_windows(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    t_out = (x.shape[-1] - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=-1)
    return win[..., ::stride, :][..., :t_out, :]


def _scatter_windows(gw: np.ndarray, length: int, stride: int) -> np.ndarray:
    """Adjoint of _strided_windows: overlap-add the per-window gradients."""
    lead, t_out, k = gw.shape[:-2], gw.shape[-2], gw.shape[-1]
    gx = np.zeros(lead + (length,), dtype=np.float64)
    pos = stride * np.arange(t_out)
    for j in range(k):  # windows may overlap when k > stride
        gx[..., pos + j] += gw[..., :, j]
    return gx


def conv1d(x, w, stride: int) -> Tensor:
    """Valid strided convolution: x (in_ch, T), w (out_ch, in_ch, k) -> (out_ch, T_out).

    Raises:
        InputTooShort: T < k.
    """
    x, w = _lift(x), _lift(w)
    k = w.data.shape[-1]
    if x.data.shape[-1] < k:
        raise InputTooShort(
            f"signal of {x.data.shape[-1]} samples shorter than kernel ({k})")
    windows = _strided_windows(x.data, k, stride)  # (in_ch, T_out, k)
    out = np.einsum("oik,itk->ot", w.data, windows, optimize=True)

    def back(g):
        if w.requires_grad:
            _accumulate(w, np.einsum("ot,itk->oik", g, windows, optimize=True))
        if x.requires_grad:
            gw = np.einsum("ot,oik->itk", g, w.data, optimize=True)
            _accumulate(x, _scatter_windows(gw, x.data.shape[-1], stride))

    return _make(out, (x, w), back)


def conv1d_shared(x, w, stride: int) -> Tensor:
    """Per-channel convolution with filters shared across channels.

    x (C, T), w (F, k) -> (F, C, T_out): every filter runs over every channel.

    Raises:
        InputTooShort: T < k.
    """
    x, w = _lift(x), _lift(w)
    k = w.data.shape[-1]
    if x.data.shape[-1] < k:
        raise InputTooShort(
            f"signal of {x.data.shape[-1]} samples shorter than kernel ({k})")
    windows = _strided_windows(x.data, k, stride)  # (C, T_out, k)
    out = np.einsum("fk,ctk->fct", w.data, windows, optimize=True)

    def back(g):
        if w.requires_grad:
            _accumulate(w, np.einsum("fct,ctk->fk", g, windows, optimize=True))
        if x.requires_grad:
            gw = np.einsum("fct,fk->ctk", g, w.data, optimize=True)
            _accumulate(x, _scatter_windows(gw, x.data.shape[-1], stride))

    return _make(out, (x, w), back)


# --- normalization blocks ---

def normalize_rows(x, scale, offset, eps: float = NORM_EPS) -> Tensor:
    """Affine normalization over the last axis of x.

    With x (C, T) and per-channel scale/offset this is group normalization
    with one group per channel; with x (T, C) and per-dim parameters it is
    layer normalization over channels.
    """
    x = _lift(x)
    mu = mean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = mean(mul(centered, centered), axis=-1, keepdims=True)
    inv = pow_const(add(var, eps), -0.5)
    return add(mul(mul(centered, inv), scale), offset)


def mse(a, b) -> Tensor:
    """Mean squared error over all elements."""
    d = sub(a, b)
    return mean(mul(d, d))
