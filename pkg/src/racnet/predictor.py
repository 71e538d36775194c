"""Density-map predictor over the fused correlation tensor.

Stages: 3x3 fusion convolution with ReLU over the N x N correlation plane;
per-frame token = that frame's row of the conv output, flattened; linear
projection plus fixed sinusoidal positional encoding; one pre-normalization
transformer encoder layer; scalar head with ReLU so densities stay
nonnegative.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .config import ModelConfig
from .errors import ValidationError
from .nnops import layernorm, layernorm_backward, linear, linear_backward, relu, \
    relu_backward, softmax_backward, softmax_lastdim


def sinusoidal_posenc(n: int, d: int) -> np.ndarray:
    """Fixed sin/cos positional table [n, d] (non-trainable)."""
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * (i // 2) / d)
    enc = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return enc


def _split_heads(x: np.ndarray, h: int) -> np.ndarray:
    b, n, d = x.shape
    return x.reshape(b, n, h, d // h).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, n, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, n, h * dh)


def predictor_forward(params: dict, cfg: ModelConfig, corr: np.ndarray):
    """corr: [B, C_in, N, N] channel-first fused correlation.

    Returns (density [B, N], cache).
    """
    b, c_in, n, n2 = corr.shape
    if n != n2 or n != cfg.n_frames or c_in != cfg.c_in:
        raise ValidationError(
            f"correlation shape {corr.shape} does not match config "
            f"(N={cfg.n_frames}, C_in={cfg.c_in})"
        )
    w_fuse = np.ascontiguousarray(params["pred.fuse.w"].transpose(3, 2, 0, 1))
    pre_fuse = kernels.conv2d_forward(np.ascontiguousarray(corr), w_fuse,
                                      params["pred.fuse.b"])
    fused = relu(pre_fuse)  # [B, c_f, N, N]

    tokens = fused.transpose(0, 2, 1, 3).reshape(b, n, cfg.c_f * n)
    z0 = linear(tokens, params["pred.proj.w"], params["pred.proj.b"])
    if cfg.use_posenc:
        z0 = z0 + params["pred.posenc"]

    h1, ln1_cache = layernorm(z0, params["pred.ln1.g"], params["pred.ln1.b"])
    q = linear(h1, params["pred.attn.wq"], params["pred.attn.bq"])
    k = linear(h1, params["pred.attn.wk"], params["pred.attn.bk"])
    v = linear(h1, params["pred.attn.wv"], params["pred.attn.bv"])
    qh, kh, vh = (_split_heads(t, cfg.p_heads) for t in (q, k, v))
    d_h = cfg.d_p // cfg.p_heads
    scores = qh @ kh.transpose(0, 1, 3, 2) / np.sqrt(d_h)
    attn = softmax_lastdim(scores)  # [B, Hp, N, N]
    ctx = _merge_heads(attn @ vh)
    attn_out = linear(ctx, params["pred.attn.wo"], params["pred.attn.bo"])
    z1 = z0 + attn_out

    h2, ln2_cache = layernorm(z1, params["pred.ln2.g"], params["pred.ln2.b"])
    ff_pre = linear(h2, params["pred.ff.w1"], params["pred.ff.b1"])
    ff_act = relu(ff_pre)
    ff_out = linear(ff_act, params["pred.ff.w2"], params["pred.ff.b2"])
    z2 = z1 + ff_out

    raw = linear(z2, params["pred.head.w"], params["pred.head.b"])[..., 0]
    density = relu(raw)

    cache = dict(params=params, cfg=cfg, corr=corr, w_fuse=w_fuse,
                 pre_fuse=pre_fuse, fused=fused, tokens=tokens,
                 ln1_cache=ln1_cache, h1=h1, qh=qh, kh=kh, vh=vh, attn=attn,
                 ctx=ctx, ln2_cache=ln2_cache, h2=h2, ff_pre=ff_pre,
                 ff_act=ff_act, z2=z2, raw=raw)
    return density, cache


def predictor_backward(cache: dict, g_density: np.ndarray):
    """Returns (grads for pred.* tensors, gradient wrt the correlation input)."""
    params, cfg = cache["params"], cache["cfg"]
    b, n = g_density.shape
    d_h = cfg.d_p // cfg.p_heads
    grads: dict[str, np.ndarray] = {}

    g_raw = relu_backward(g_density, cache["raw"])[..., None]  # [B, N, 1]
    g_z2, grads["pred.head.w"], grads["pred.head.b"] = linear_backward(
        g_raw, cache["z2"], params["pred.head.w"])

    g_ff_act, grads["pred.ff.w2"], grads["pred.ff.b2"] = linear_backward(
        g_z2, cache["ff_act"], params["pred.ff.w2"])
    g_ff_pre = relu_backward(g_ff_act, cache["ff_pre"])
    g_h2, grads["pred.ff.w1"], grads["pred.ff.b1"] = linear_backward(
        g_ff_pre, cache["h2"], params["pred.ff.w1"])
    g_ln2_in, grads["pred.ln2.g"], grads["pred.ln2.b"] = layernorm_backward(
        g_h2, cache["ln2_cache"])
    g_z1 = g_z2 + g_ln2_in  # residual around the feed-forward block

    g_ctx, grads["pred.attn.wo"], grads["pred.attn.bo"] = linear_backward(
        g_z1, cache["ctx"], params["pred.attn.wo"])
    g_heads = _split_heads(g_ctx, cfg.p_heads)  # [B, Hp, N, d_h]
    attn, vh, qh, kh = cache["attn"], cache["vh"], cache["qh"], cache["kh"]
    g_attn = g_heads @ vh.transpose(0, 1, 3, 2)
    g_vh = attn.transpose(0, 1, 3, 2) @ g_heads
    g_scores = softmax_backward(attn, g_attn)
    g_qh = g_scores @ kh / np.sqrt(d_h)
    g_kh = g_scores.transpose(0, 1, 3, 2) @ qh / np.sqrt(d_h)
    g_q, g_k, g_v = (_merge_heads(t) for t in (g_qh, g_kh, g_vh))
    g_h1_q, grads["pred.attn.wq"], grads["pred.attn.bq"] = linear_backward(
        g_q, cache["h1"], params["pred.attn.wq"])
    g_h1_k, grads["pred.attn.wk"], grads["pred.attn.bk"] = linear_backward(
        g_k, cache["h1"], params["pred.attn.wk"])
    g_h1_v, grads["pred.attn.wv"], grads["pred.attn.bv"] = linear_backward(
        g_v, cache["h1"], params["pred.attn.wv"])
    g_ln1_in, grads["pred.ln1.g"], grads["pred.ln1.b"] = layernorm_backward(
        g_h1_q + g_h1_k + g_h1_v, cache["ln1_cache"])
    g_z0 = g_z1 + g_ln1_in  # residual around the attention block

    g_tokens, grads["pred.proj.w"], grads["pred.proj.b"] = linear_backward(
        g_z0, cache["tokens"], params["pred.proj.w"])
    g_fused = g_tokens.reshape(b, n, cfg.c_f, n).transpose(0, 2, 1, 3)
    g_pre_fuse = relu_backward(g_fused, cache["pre_fuse"])
    g_corr, g_wf, grads["pred.fuse.b"] = kernels.conv2d_backward(
        cache["corr"], cache["w_fuse"], np.ascontiguousarray(g_pre_fuse))
    grads["pred.fuse.w"] = g_wf.transpose(2, 3, 1, 0)
    return grads, g_corr


def predict_density(corr: np.ndarray, params: dict, cfg: ModelConfig) -> np.ndarray:
    """Single fused correlation tensor [N, N, C_in] -> density map [N]."""
    if corr.ndim != 3:
        raise ValidationError(f"expected [N, N, C] correlation, got {corr.shape}")
    batched = np.ascontiguousarray(corr.transpose(2, 0, 1)[None], dtype=np.float64)
    density, _ = predictor_forward(params, cfg, batched)
    return density[0]


def count_from_density(density: np.ndarray) -> float:
    """Linear sum of the density map; the count estimate, un-rounded."""
    return float(np.sum(density))
