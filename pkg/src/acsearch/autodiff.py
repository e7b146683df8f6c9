"""Minimal reverse-mode automatic differentiation over dense 2-D matrices.

Forward ops record parent links and backward rules; backward() walks the
recorded graph in reverse topological order. Double precision throughout so
finite-difference gradient checks are meaningful.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A dense row-major matrix with an optionally tracked gradient."""

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_rule", "name")

    def __init__(self, values, requires_grad=False, parents=(), rule=None, name=""):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ValueError(f"tensors are 2-D, got shape {arr.shape}")
        self.values = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._rule = rule
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _needs_grad(t):
    return t.requires_grad or bool(t._parents)


def backward(loss):
    """Populate gradients of every reachable tensor that requires them.

    Gradients accumulate across calls until zero_grad.
    """
    if loss.shape != (1, 1):
        raise ValueError(f"loss must be scalar (1x1), got {loss.shape}")
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and _needs_grad(p):
                stack.append((p, False))
    grads = {id(loss): np.ones((1, 1))}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node._accumulate(g)
        if node._rule is None:
            continue
        for parent, pg in node._rule(g):
            if not _needs_grad(parent):
                continue
            if id(parent) in grads:
                grads[id(parent)] += pg
            else:
                # copy: rules may hand back the same array to several parents
                grads[id(parent)] = np.array(pg)


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.shape} vs {b.shape}")

    def rule(g):
        return ((a, g @ b.values.T), (b, a.values.T @ g))

    return Tensor(a.values @ b.values, parents=(a, b), rule=rule)


def add(a, b):
    """Elementwise add; a (1, c) operand broadcasts over rows."""
    if a.shape != b.shape and not (
        (a.shape[0] == 1 or b.shape[0] == 1) and a.shape[1] == b.shape[1]
    ):
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")

    def rule(g):
        ga = g.sum(axis=0, keepdims=True) if a.shape[0] == 1 and g.shape[0] > 1 else g
        gb = g.sum(axis=0, keepdims=True) if b.shape[0] == 1 and g.shape[0] > 1 else g
        return ((a, ga), (b, gb))

    return Tensor(a.values + b.values, parents=(a, b), rule=rule)


def sub(a, b):
    _check_same_shape(a, b, "sub")

    def rule(g):
        return ((a, g), (b, -g))

    return Tensor(a.values - b.values, parents=(a, b), rule=rule)


def mul(a, b):
    _check_same_shape(a, b, "mul")

    def rule(g):
        return ((a, g * b.values), (b, g * a.values))

    return Tensor(a.values * b.values, parents=(a, b), rule=rule)


def scale(a, k):
    """Multiply by a python scalar constant."""

    def rule(g):
        return ((a, g * k),)

    return Tensor(a.values * k, parents=(a,), rule=rule)


def scalar_mul(s, a):
    """Multiply a matrix by a learnable 1x1 scalar tensor."""
    if s.shape != (1, 1):
        raise ValueError(f"scalar_mul: scalar must be 1x1, got {s.shape}")

    def rule(g):
        return ((s, np.array([[np.sum(g * a.values)]])), (a, g * s.values[0, 0]))

    return Tensor(a.values * s.values[0, 0], parents=(s, a), rule=rule)


def relu(a):
    mask = a.values > 0

    def rule(g):
        return ((a, g * mask),)

    return Tensor(a.values * mask, parents=(a,), rule=rule)


def sigmoid(a):
    out = 1.0 / (1.0 + np.exp(-a.values))

    def rule(g):
        return ((a, g * out * (1.0 - out)),)

    return Tensor(out, parents=(a,), rule=rule)


def log(a):
    def rule(g):
        return ((a, g / a.values),)

    return Tensor(np.log(a.values), parents=(a,), rule=rule)


def clamp(a, lo, hi):
    """Clamp values into [lo, hi]; gradient passes only where unclipped."""
    mask = (a.values > lo) & (a.values < hi)

    def rule(g):
        return ((a, g * mask),)

    return Tensor(np.clip(a.values, lo, hi), parents=(a,), rule=rule)


def softmax_rows(a):
    shifted = a.values - a.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def rule(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return ((a, out * (g - dot)),)

    return Tensor(out, parents=(a,), rule=rule)


def transpose(a):
    def rule(g):
        return ((a, g.T),)

    return Tensor(a.values.T, parents=(a,), rule=rule)


def tsum(a):
    def rule(g):
        return ((a, np.full(a.shape, g[0, 0])),)

    return Tensor(np.array([[a.values.sum()]]), parents=(a,), rule=rule)


def mean_rows(a):
    n = a.shape[0]

    def rule(g):
        return ((a, np.repeat(g, n, axis=0) / n),)

    return Tensor(a.values.mean(axis=0, keepdims=True), parents=(a,), rule=rule)


def broadcast_rows(a, n):
    """Replicate a 1 x d row onto n rows."""
    if a.shape[0] != 1:
        raise ValueError(f"broadcast_rows: expected a single row, got {a.shape}")

    def rule(g):
        return ((a, g.sum(axis=0, keepdims=True)),)

    return Tensor(np.repeat(a.values, n, axis=0), parents=(a,), rule=rule)


def concat_cols(*tensors):
    rows = tensors[0].shape[0]
    for t in tensors:
        if t.shape[0] != rows:
            raise ValueError(
                f"concat_cols: row mismatch {t.shape} vs {tensors[0].shape}"
            )
    splits = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def rule(g):
        parts = np.split(g, splits, axis=1)
        return tuple(zip(tensors, parts))

    return Tensor(np.concatenate([t.values for t in tensors], axis=1),
                  parents=tensors, rule=rule)


def frobenius_norm(a):
    norm = float(np.sqrt((a.values ** 2).sum()))

    def rule(g):
        if norm == 0.0:
            return ((a, np.zeros_like(a.values)),)  # subgradient at 0
        return ((a, g[0, 0] * a.values / norm),)

    return Tensor(np.array([[norm]]), parents=(a,), rule=rule)


def dropout(a, rate, training, rng=None):
    """Zero entries with probability rate and rescale survivors (train only)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        def rule(g):
            return ((a, g),)

        return Tensor(a.values.copy(), parents=(a,), rule=rule)
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)

    def rule(g):
        return ((a, g * mask),)

    return Tensor(a.values * mask, parents=(a,), rule=rule)


def clip_weights(params, c):
    """Clamp every parameter entry into [-c, c] in place."""
    if c <= 0:
        raise ValueError("clip bound must be > 0")
    for p in params:
        np.clip(p.values, -c, c, out=p.values)


def zero_grads(params):
    for p in params:
        p.zero_grad()


class AdamState:
    """Adam with a step-decayed learning rate schedule."""

    def __init__(self, params, lr=1e-3, decay=0.5, decay_interval=100,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        self.params = list(params)
        self.lr = lr
        self.decay = decay
        self.decay_interval = decay_interval
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros(p.shape) for p in self.params]
        self.v = [np.zeros(p.shape) for p in self.params]

    def effective_lr(self):
        return self.lr * self.decay ** (self.t // self.decay_interval)

    def step(self):
        lr = self.effective_lr()
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            mhat = self.m[i] / (1 - self.beta1 ** self.t)
            vhat = self.v[i] / (1 - self.beta2 ** self.t)
            p.values -= lr * mhat / (np.sqrt(vhat) + self.eps)
