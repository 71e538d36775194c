"""Vectorized convolution kernels.

Each k-tap of the kernel contributes one shifted slice of the padded input,
so forward and both backward passes reduce to a handful of batched matmuls.
Odd kernel sizes only ("same" padding of k//2 per side).
"""

from __future__ import annotations

import numpy as np


def conv3d_forward(x, w, b):
    """x [B,C,T,H,W] * w [O,C,KT,KH,KW] + b [O] -> y [B,O,T,H,W]."""
    B, C, T, H, W = x.shape
    O, _, KT, KH, KW = w.shape
    pt, ph, pw = KT // 2, KH // 2, KW // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))
    y = np.zeros((B, O, T * H * W), dtype=x.dtype)
    for kt in range(KT):
        for kh in range(KH):
            for kw in range(KW):
                xs = xp[:, :, kt:kt + T, kh:kh + H, kw:kw + W].reshape(B, C, -1)
                y += np.matmul(w[:, :, kt, kh, kw], xs)
    y = y.reshape(B, O, T, H, W)
    y += b[None, :, None, None, None]
    return y


def conv3d_backward(x, w, gy):
    """Gradients of conv3d_forward wrt x, w, b given upstream gy."""
    B, C, T, H, W = x.shape
    O, _, KT, KH, KW = w.shape
    pt, ph, pw = KT // 2, KH // 2, KW // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))
    gy_flat = gy.reshape(B, O, -1)
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp)
    for kt in range(KT):
        for kh in range(KH):
            for kw in range(KW):
                xs = xp[:, :, kt:kt + T, kh:kh + H, kw:kw + W].reshape(B, C, -1)
                gw[:, :, kt, kh, kw] = np.matmul(gy_flat, xs.transpose(0, 2, 1)).sum(axis=0)
                gxs = np.matmul(w[:, :, kt, kh, kw].T, gy_flat).reshape(B, C, T, H, W)
                gxp[:, :, kt:kt + T, kh:kh + H, kw:kw + W] += gxs
    gx = gxp[:, :, pt:pt + T, ph:ph + H, pw:pw + W]
    gb = gy.sum(axis=(0, 2, 3, 4))
    return gx, gw, gb


def conv2d_forward(x, w, b):
    """x [B,C,H,W] * w [O,C,KH,KW] + b [O] -> y [B,O,H,W]."""
    B, C, H, W = x.shape
    O, _, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    y = np.zeros((B, O, H * W), dtype=x.dtype)
    for kh in range(KH):
        for kw in range(KW):
            xs = xp[:, :, kh:kh + H, kw:kw + W].reshape(B, C, -1)
            y += np.matmul(w[:, :, kh, kw], xs)
    y = y.reshape(B, O, H, W)
    y += b[None, :, None, None]
    return y


def conv2d_backward(x, w, gy):
    """Gradients of conv2d_forward wrt x, w, b given upstream gy."""
    B, C, H, W = x.shape
    O, _, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    gy_flat = gy.reshape(B, O, -1)
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp)
    for kh in range(KH):
        for kw in range(KW):
            xs = xp[:, :, kh:kh + H, kw:kw + W].reshape(B, C, -1)
            gw[:, :, kh, kw] = np.matmul(gy_flat, xs.transpose(0, 2, 1)).sum(axis=0)
            gxs = np.matmul(w[:, :, kh, kw].T, gy_flat).reshape(B, C, H, W)
            gxp[:, :, kh:kh + H, kw:kw + W] += gxs
    gx = gxp[:, :, ph:ph + H, pw:pw + W]
    gb = gy.sum(axis=(0, 2, 3))
    return gx, gw, gb
