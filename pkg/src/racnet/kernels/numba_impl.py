"""Loop-nest convolution kernels compiled with numba.

Same contracts as numpy_impl. conv2d runs on a zero-padded copy so its inner
loops have constant bounds over the contiguous row axis. conv3d additionally
shuffles to a time-last layout internally: the feature grids it sees are tiny
(S1 x S2) while the clip axis is long, so time is the profitable vector axis.
Summation order is fixed, so a given backend is bit-reproducible run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def conv3d_forward(x, w, b):
    B, C, T, H, W = x.shape
    O, _, KT, KH, KW = w.shape
    pt, ph, pw = KT // 2, KH // 2, KW // 2
    xt = np.zeros((B, C, H, W, T + KT - 1), dtype=x.dtype)
    xt[:, :, :, :, pt:pt + T] = np.ascontiguousarray(x.transpose(0, 1, 3, 4, 2))
    yt = np.empty((B, O, H, W, T), dtype=x.dtype)
    for bi in range(B):
        for o in range(O):
            yt[bi, o] = b[o]
            for c in range(C):
                for kh in range(KH):
                    di = kh - ph
                    i0, i1 = max(0, -di), min(H, H - di)
                    for kw in range(KW):
                        dj = kw - pw
                        j0, j1 = max(0, -dj), min(W, W - dj)
                        for kt in range(KT):
                            wv = w[o, c, kt, kh, kw]
                            for i in range(i0, i1):
                                for j in range(j0, j1):
                                    yrow = yt[bi, o, i, j]
                                    xrow = xt[bi, c, i + di, j + dj]
                                    for t in range(T):
                                        yrow[t] += wv * xrow[t + kt]
    return np.ascontiguousarray(yt.transpose(0, 1, 4, 2, 3))


@njit(cache=True)
def conv3d_backward(x, w, gy):
    B, C, T, H, W = x.shape
    O, _, KT, KH, KW = w.shape
    pt, ph, pw = KT // 2, KH // 2, KW // 2
    xt = np.zeros((B, C, H, W, T + KT - 1), dtype=x.dtype)
    xt[:, :, :, :, pt:pt + T] = np.ascontiguousarray(x.transpose(0, 1, 3, 4, 2))
    gyt = np.ascontiguousarray(gy.transpose(0, 1, 3, 4, 2))
    gxt = np.zeros_like(xt)
    gw = np.zeros_like(w)
    gb = np.zeros(O, dtype=x.dtype)
    for bi in range(B):
        for o in range(O):
            gb[o] += np.sum(gyt[bi, o])
            for c in range(C):
                for kh in range(KH):
                    di = kh - ph
                    i0, i1 = max(0, -di), min(H, H - di)
                    for kw in range(KW):
                        dj = kw - pw
                        j0, j1 = max(0, -dj), min(W, W - dj)
                        for kt in range(KT):
                            wv = w[o, c, kt, kh, kw]
                            acc = 0.0
                            for i in range(i0, i1):
                                for j in range(j0, j1):
                                    grow = gyt[bi, o, i, j]
                                    xrow = xt[bi, c, i + di, j + dj]
                                    gxrow = gxt[bi, c, i + di, j + dj]
                                    for t in range(T):
                                        g = grow[t]
                                        acc += g * xrow[t + kt]
                                        gxrow[t + kt] += g * wv
                            gw[o, c, kt, kh, kw] += acc
    gx = np.ascontiguousarray(gxt[:, :, :, :, pt:pt + T].transpose(0, 1, 4, 2, 3))
    return gx, gw, gb


@njit(cache=True)
def conv2d_forward(x, w, b):
    B, C, H, W = x.shape
    O, _, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    xp = np.zeros((B, C, H + KH - 1, W + KW - 1), dtype=x.dtype)
    xp[:, :, ph:ph + H, pw:pw + W] = x
    y = np.empty((B, O, H, W), dtype=x.dtype)
    for bi in range(B):
        for o in range(O):
            y[bi, o] = b[o]
            for c in range(C):
                for kh in range(KH):
                    for kw in range(KW):
                        wv = w[o, c, kh, kw]
                        for i in range(H):
                            for j in range(W):
                                y[bi, o, i, j] += wv * xp[bi, c, i + kh, j + kw]
    return y


@njit(cache=True)
def conv2d_backward(x, w, gy):
    B, C, H, W = x.shape
    O, _, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    xp = np.zeros((B, C, H + KH - 1, W + KW - 1), dtype=x.dtype)
    xp[:, :, ph:ph + H, pw:pw + W] = x
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    gb = np.zeros(O, dtype=x.dtype)
    for bi in range(B):
        for o in range(O):
            gb[o] += np.sum(gy[bi, o])
            for c in range(C):
                for kh in range(KH):
                    for kw in range(KW):
                        wv = w[o, c, kh, kw]
                        acc = 0.0
                        for i in range(H):
                            for j in range(W):
                                g = gy[bi, o, i, j]
                                acc += g * xp[bi, c, i + kh, j + kw]
                                gxp[bi, c, i + kh, j + kw] += g * wv
                        gw[o, c, kh, kw] += acc
    gx = gxp[:, :, ph:ph + H, pw:pw + W].copy()
    return gx, gw, gb
