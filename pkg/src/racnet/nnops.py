"""Differentiable primitives shared by the encoder, correlation and predictor.

Every forward returns what its backward needs; backward functions return
exact analytic gradients. All math is done in the dtype of the inputs
(float64 during training and gradient checks).
"""

from __future__ import annotations

import numpy as np

LN_EPS = 1e-5


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(gy, x):
    return gy * (x > 0)


def softmax_lastdim(x):
    """Row-wise softmax over the last axis, shift-stabilized."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(y, gy):
    """Gradient through softmax given its output y."""
    return y * (gy - (gy * y).sum(axis=-1, keepdims=True))


def layernorm(x, gamma, beta):
    """Normalize over the last axis, then scale and shift.

    Returns (y, cache) where cache feeds layernorm_backward.
    """
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mean) * inv
    return xhat * gamma + beta, (xhat, inv, gamma)


def layernorm_backward(gy, cache):
    """Returns (gx, ggamma, gbeta)."""
    xhat, inv, gamma = cache
    lead = tuple(range(gy.ndim - 1))
    ggamma = (gy * xhat).sum(axis=lead)
    gbeta = gy.sum(axis=lead)
    gh = gy * gamma
    gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
    return gx, ggamma, gbeta


def linear(x, w, b=None):
    """x [..., din] @ w [din, dout] (+ b)."""
    y = x @ w
    if b is not None:
        y = y + b
    return y


def linear_backward(gy, x, w, with_bias=True):
    """Returns (gx, gw, gb); gw/gb are summed over all leading axes."""
    gx = gy @ w.T
    gw = np.tensordot(x, gy, axes=(tuple(range(x.ndim - 1)), tuple(range(gy.ndim - 1))))
    gb = gy.sum(axis=tuple(range(gy.ndim - 1))) if with_bias else None
    return gx, gw, gb
