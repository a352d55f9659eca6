"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and records the operation that produced it; calling
``backward()`` on a scalar loss walks the tape in reverse topological order.
Heavy recurrent pieces (the LSTM layer) are fused single ops with hand-derived
backward passes; everything is validated against central finite differences by
the model module's gradient check.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data, dtype=g.dtype)
        self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar")
        topo: list[Tensor] = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Sugar used throughout the model code.
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over broadcast dimensions back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)  # keep numpy scalar types from promoting float32 data

    def backward(g):
        if a.requires_grad:
            a._accum(g * s)

    return Tensor(a.data * s, parents=(a,), backward=backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        a._accum(g * mask)

    return Tensor(a.data * mask, parents=(a,), backward=backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g):
        a._accum(g * (1.0 - out_data * out_data))

    return Tensor(out_data, parents=(a,), backward=backward)


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.data.shape

    def backward(g):
        a._accum(g.reshape(orig))

    return Tensor(a.data.reshape(shape), parents=(a,), backward=backward)


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    def backward(g):
        a._accum(np.swapaxes(g, ax1, ax2))

    return Tensor(np.swapaxes(a.data, ax1, ax2), parents=(a,), backward=backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accum(g[tuple(idx)])

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=axis),
        parents=tuple(tensors),
        backward=backward,
    )


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        table._accum(gt)

    return Tensor(table.data[ids], parents=(table,), backward=backward)


def dropout(a: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    if p <= 0.0:
        return a
    mask = ((rng.random(a.data.shape) >= p) / (1.0 - p)).astype(a.data.dtype)

    def backward(g):
        a._accum(g * mask)

    return Tensor(a.data * mask, parents=(a,), backward=backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out_data = xhat * gamma.data + beta.data
    d = x.data.shape[-1]

    def backward(g):
        if gamma.requires_grad:
            gamma._accum(
                _unbroadcast((g * xhat).reshape(-1, d).sum(axis=0), gamma.data.shape)
            )
        if beta.requires_grad:
            beta._accum(_unbroadcast(g.reshape(-1, d).sum(axis=0), beta.data.shape))
        if x.requires_grad:
            gx = g * gamma.data
            term = gx - gx.mean(axis=-1, keepdims=True)
            term -= xhat * (gx * xhat).mean(axis=-1, keepdims=True)
            x._accum(term * inv)

    return Tensor(out_data, parents=(x, gamma, beta), backward=backward)


def masked_softmax(scores: Tensor, key_mask: np.ndarray) -> Tensor:
    """Softmax over the last axis with boolean key_mask (False = masked out).

    key_mask broadcasts against scores; masked positions get exactly zero
    weight.  Rows must contain at least one unmasked key.
    """
    neg = np.where(key_mask, scores.data, -np.inf)
    m = neg.max(axis=-1, keepdims=True)
    e = np.exp(neg - m)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * p).sum(axis=-1, keepdims=True)
        scores._accum(p * (g - dot))

    return Tensor(p, parents=(scores,), backward=backward)


def softmax(scores: Tensor) -> Tensor:
    return masked_softmax(scores, np.ones(scores.data.shape[-1:], dtype=bool))


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size

    def backward(g):
        a._accum(np.full_like(a.data, float(g) / n))

    return Tensor(np.asarray(a.data.mean()), parents=(a,), backward=backward)


def masked_nll(probs: Tensor, labels: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean of -log(probs[gold]) over mask-true positions.

    probs: (B, L, C); labels: (B, L) ints; mask: (B, L) bool.
    """
    count = int(mask.sum())
    if count == 0:
        raise ValueError("all positions masked")
    b_idx, l_idx = np.nonzero(mask)
    picked = probs.data[b_idx, l_idx, labels[b_idx, l_idx]]
    loss = -np.log(np.maximum(picked, 1e-30)).sum() / count

    def backward(g):
        gp = np.zeros_like(probs.data)
        gp[b_idx, l_idx, labels[b_idx, l_idx]] = (
            -float(g) / (count * np.maximum(picked, 1e-30))
        )
        probs._accum(gp)

    return Tensor(np.asarray(loss), parents=(probs,), backward=backward)


def flip_padded(x: Tensor, lengths: np.ndarray) -> Tensor:
    """Reverse each row's valid prefix (per `lengths`), leaving padding fixed.

    The index map is a per-row involution, so the backward pass is the same
    gather applied to the gradient.
    """
    B, L = x.data.shape[:2]
    idx = np.tile(np.arange(L), (B, 1))
    for b, n in enumerate(lengths):
        idx[b, :n] = np.arange(n - 1, -1, -1)
    rows = np.arange(B)[:, None]

    def backward(g):
        x._accum(g[rows, idx])

    return Tensor(x.data[rows, idx], parents=(x,), backward=backward)


def lstm(x: Tensor, wx: Tensor, wh: Tensor, b: Tensor) -> Tensor:
    """Unidirectional LSTM layer; returns hidden states for every step.

    x: (B, L, D); wx: (D, 4H); wh: (H, 4H); b: (4H,).  Gate order i, f, g, o.
    Hand-derived truncated-free BPTT backward.
    """
    B, L, D = x.data.shape
    H = wh.data.shape[0]
    pre_x = x.data @ wx.data + b.data  # (B, L, 4H)
    hs = np.zeros((B, L, H), dtype=x.data.dtype)
    cs = np.zeros((B, L + 1, H), dtype=x.data.dtype)
    gates = np.zeros((B, L, 4 * H), dtype=x.data.dtype)
    tanh_cs = np.zeros((B, L, H), dtype=x.data.dtype)
    h = np.zeros((B, H), dtype=x.data.dtype)
    for t in range(L):
        pre = pre_x[:, t] + h @ wh.data
        i = _sigmoid(pre[:, :H])
        f = _sigmoid(pre[:, H : 2 * H])
        g_ = np.tanh(pre[:, 2 * H : 3 * H])
        o = _sigmoid(pre[:, 3 * H :])
        c = f * cs[:, t] + i * g_
        tc = np.tanh(c)
        h = o * tc
        cs[:, t + 1] = c
        hs[:, t] = h
        gates[:, t, :H] = i
        gates[:, t, H : 2 * H] = f
        gates[:, t, 2 * H : 3 * H] = g_
        gates[:, t, 3 * H :] = o
        tanh_cs[:, t] = tc

    def backward(g_out):
        dpre_all = np.zeros((B, L, 4 * H), dtype=g_out.dtype)
        dh_next = np.zeros((B, H), dtype=g_out.dtype)
        dc_next = np.zeros((B, H), dtype=g_out.dtype)
        whT = wh.data.T
        for t in range(L - 1, -1, -1):
            i = gates[:, t, :H]
            f = gates[:, t, H : 2 * H]
            g_ = gates[:, t, 2 * H : 3 * H]
            o = gates[:, t, 3 * H :]
            tc = tanh_cs[:, t]
            dh = g_out[:, t] + dh_next
            dtc = dh * o * (1.0 - tc * tc) + dc_next
            dpre = dpre_all[:, t]
            dpre[:, :H] = dtc * g_ * i * (1.0 - i)
            dpre[:, H : 2 * H] = dtc * cs[:, t] * f * (1.0 - f)
            dpre[:, 2 * H : 3 * H] = dtc * i * (1.0 - g_ * g_)
            dpre[:, 3 * H :] = dh * tc * o * (1.0 - o)
            dh_next = dpre @ whT
            dc_next = dtc * f
        flat_pre = dpre_all.reshape(-1, 4 * H)
        if wx.requires_grad:
            wx._accum(x.data.reshape(-1, D).T @ flat_pre)
        if b.requires_grad:
            b._accum(flat_pre.sum(axis=0))
        if wh.requires_grad:
            # h feeding step t is hs[:, t-1] (zeros at t=0).
            h_prev = np.concatenate(
                [np.zeros((B, 1, H), dtype=hs.dtype), hs[:, :-1]], axis=1
            )
            wh._accum(h_prev.reshape(-1, H).T @ flat_pre)
        if x.requires_grad:
            x._accum(dpre_all @ wx.data.T)

    return Tensor(hs, parents=(x, wx, wh, b), backward=backward)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
