"""Parameter container and the end-to-end batched forward/backward pass.

Parameters live in one flat dict of float64 arrays keyed by stable names
(the same names used in checkpoint files):

    encoder.conv.w [3,3,3,d_f,d_e]   encoder.conv.b [d_e]
    corr.s{p}.wq / corr.s{p}.wk [H,d_e,d_h]   (attention mode, per scale p)
    pred.fuse.w [3,3,C_in,c_f]       pred.fuse.b [c_f]
    pred.proj.w [N*c_f,d_p]          pred.proj.b [d_p]
    pred.posenc [N,d_p]              (fixed, non-trainable)
    pred.ln1.g/b, pred.ln2.g/b [d_p]
    pred.attn.wq/wk/wv/wo [d_p,d_p] + bq/bk/bv/bo [d_p]
    pred.ff.w1 [d_p,d_ff] + b1, pred.ff.w2 [d_ff,d_p] + b2
    pred.head.w [d_p,1]              pred.head.b [1]
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .config import ModelConfig
from .errors import ValidationError
from .fileio import read_racw, write_racw
from .nnops import relu, softmax_backward, softmax_lastdim
from .predictor import predictor_backward, predictor_forward, sinusoidal_posenc

NON_TRAINABLE = ("pred.posenc",)


def _glorot(rng, shape, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(cfg: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Seeded initialization; dict order is the draw order (and file order)."""
    rng = np.random.default_rng(seed)
    n, d_f, d_e, c_f, d_p, d_ff = (cfg.n_frames, cfg.d_f, cfg.d_e, cfg.c_f,
                                   cfg.d_p, cfg.d_ff)
    p: dict[str, np.ndarray] = {}
    p["encoder.conv.w"] = _glorot(rng, (3, 3, 3, d_f, d_e), 27 * d_f, 27 * d_e)
    p["encoder.conv.b"] = np.zeros(d_e)
    if cfg.corr_mode == "attention":
        a = np.sqrt(6.0 / (d_e + cfg.d_h))
        for s in cfg.scales:
            p[f"corr.s{s}.wq"] = rng.uniform(-a, a, size=(cfg.heads, d_e, cfg.d_h))
            p[f"corr.s{s}.wk"] = rng.uniform(-a, a, size=(cfg.heads, d_e, cfg.d_h))
    c_in = cfg.c_in
    p["pred.fuse.w"] = _glorot(rng, (3, 3, c_in, c_f), 9 * c_in, 9 * c_f)
    p["pred.fuse.b"] = np.zeros(c_f)
    p["pred.proj.w"] = _glorot(rng, (n * c_f, d_p), n * c_f, d_p)
    p["pred.proj.b"] = np.zeros(d_p)
    p["pred.posenc"] = sinusoidal_posenc(n, d_p)
    p["pred.ln1.g"] = np.ones(d_p)
    p["pred.ln1.b"] = np.zeros(d_p)
    for name in ("wq", "wk", "wv", "wo"):
        p[f"pred.attn.{name}"] = _glorot(rng, (d_p, d_p), d_p, d_p)
        p[f"pred.attn.b{name[1]}"] = np.zeros(d_p)
    p["pred.ln2.g"] = np.ones(d_p)
    p["pred.ln2.b"] = np.zeros(d_p)
    p["pred.ff.w1"] = _glorot(rng, (d_p, d_ff), d_p, d_ff)
    p["pred.ff.b1"] = np.zeros(d_ff)
    p["pred.ff.w2"] = _glorot(rng, (d_ff, d_p), d_ff, d_p)
    p["pred.ff.b2"] = np.zeros(d_p)
    p["pred.head.w"] = _glorot(rng, (d_p, 1), d_p, 1)
    # a small positive bias keeps the ReLU head live at initialization
    p["pred.head.b"] = np.full(1, 0.1)
    return p


def trainable_names(params: dict) -> list[str]:
    return [k for k in params if k not in NON_TRAINABLE]


def _encode_batch(params, x):
    """x: [B, N, S1, S2, d_f] -> embeddings [B, N, d_e] plus backward cache."""
    b, n, s1, s2, d_f = x.shape
    xc = np.ascontiguousarray(x.transpose(0, 4, 1, 2, 3))  # [B, d_f, N, S1, S2]
    w = np.ascontiguousarray(params["encoder.conv.w"].transpose(4, 3, 0, 1, 2))
    pre = kernels.conv3d_forward(xc, w, params["encoder.conv.b"])
    act = relu(pre)  # [B, d_e, N, S1, S2]
    d_e = act.shape[1]
    flat = act.reshape(b, d_e, n, s1 * s2)
    arg = flat.argmax(axis=-1)
    pooled = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    emb = pooled.transpose(0, 2, 1)  # [B, N, d_e]
    return emb, dict(xc=xc, w=w, pre=pre, arg=arg, grid=(s1, s2))


def _encode_batch_backward(cache, g_emb):
    """Returns (g_conv_w [3,3,3,d_f,d_e], g_conv_b, g_x)."""
    xc, w, pre, arg = cache["xc"], cache["w"], cache["pre"], cache["arg"]
    s1, s2 = cache["grid"]
    b, d_e, n = arg.shape
    g_flat = np.zeros((b, d_e, n, s1 * s2))
    np.put_along_axis(g_flat, arg[..., None],
                      g_emb.transpose(0, 2, 1)[..., None], axis=-1)
    g_act = g_flat.reshape(pre.shape)
    g_pre = g_act * (pre > 0)
    g_xc, g_w, g_b = kernels.conv3d_backward(xc, w, np.ascontiguousarray(g_pre))
    return g_w.transpose(2, 3, 4, 1, 0), g_b, g_xc.transpose(0, 2, 3, 4, 1)


def _attention_corr_batch(emb, wq, wk):
    """emb [B,N,d_e] -> (attention [B,H,N,N], cache)."""
    d_h = wq.shape[2]
    q = np.einsum("bnd,hdk->bhnk", emb, wq)
    k = np.einsum("bnd,hdk->bhnk", emb, wk)
    scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(d_h)
    attn = softmax_lastdim(scores)
    return attn, dict(emb=emb, wq=wq, wk=wk, q=q, k=k, attn=attn, d_h=d_h)


def _attention_corr_backward(cache, g_attn):
    """Returns (g_emb, g_wq, g_wk)."""
    g_scores = softmax_backward(cache["attn"], g_attn)
    scale = 1.0 / np.sqrt(cache["d_h"])
    g_q = g_scores @ cache["k"] * scale
    g_k = g_scores.transpose(0, 1, 3, 2) @ cache["q"] * scale
    g_emb = (np.einsum("bhnk,hdk->bnd", g_q, cache["wq"])
             + np.einsum("bhnk,hdk->bnd", g_k, cache["wk"]))
    g_wq = np.einsum("bnd,bhnk->hdk", cache["emb"], g_q)
    g_wk = np.einsum("bnd,bhnk->hdk", cache["emb"], g_k)
    return g_emb, g_wq, g_wk


def _tsm_corr_batch(emb):
    """emb [B,N,d_e] -> (similarity channel [B,1,N,N], cache)."""
    sq = (emb * emb).sum(axis=2)
    dist2 = sq[:, :, None] + sq[:, None, :] - 2.0 * (emb @ emb.transpose(0, 2, 1))
    dist2 = np.maximum(0.5 * (dist2 + dist2.transpose(0, 2, 1)), 0.0)
    idx = np.arange(emb.shape[1])
    dist2[:, idx, idx] = 0.0
    scores = -dist2 / np.sqrt(emb.shape[2])
    attn = softmax_lastdim(scores)
    return attn[:, None], dict(emb=emb, attn=attn)


def _tsm_corr_backward(cache, g_attn):
    emb, attn = cache["emb"], cache["attn"]
    g_scores = softmax_backward(attn, g_attn[:, 0])
    g_dist2 = -g_scores / np.sqrt(emb.shape[2])
    row = g_dist2.sum(axis=2)
    col = g_dist2.sum(axis=1)
    g_emb = 2.0 * ((row + col)[..., None] * emb
                   - g_dist2 @ emb
                   - g_dist2.transpose(0, 2, 1) @ emb)
    return g_emb


def forward(params: dict, cfg: ModelConfig, feats: dict[int, np.ndarray]):
    """feats: per-scale clip features {scale: [B, N, S1, S2, d_f]}.

    Returns (density [B, N], cache).
    """
    if set(feats) != set(cfg.scales):
        raise ValidationError(f"features for scales {sorted(feats)} but config "
                              f"wants {cfg.scales}")
    scale_caches = {}
    channels = []
    for s in cfg.scales:
        emb, enc_cache = _encode_batch(params, np.asarray(feats[s], dtype=np.float64))
        if cfg.corr_mode == "attention":
            attn, corr_cache = _attention_corr_batch(
                emb, params[f"corr.s{s}.wq"], params[f"corr.s{s}.wk"])
        else:
            attn, corr_cache = _tsm_corr_batch(emb)
        scale_caches[s] = (enc_cache, corr_cache)
        channels.append(attn)
    corr = np.concatenate(channels, axis=1)  # [B, M*H, N, N], scale-major
    density, pred_cache = predictor_forward(params, cfg, corr)
    return density, dict(cfg=cfg, scale_caches=scale_caches,
                         pred_cache=pred_cache, params=params)


def backward(cache: dict, g_density: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of sum(g_density * density) wrt every trainable tensor."""
    cfg, params = cache["cfg"], cache["params"]
    grads, g_corr = predictor_backward(cache["pred_cache"], g_density)
    per_scale = cfg.heads if cfg.corr_mode == "attention" else 1
    g_conv_w = np.zeros_like(params["encoder.conv.w"])
    g_conv_b = np.zeros_like(params["encoder.conv.b"])
    for i, s in enumerate(cfg.scales):
        enc_cache, corr_cache = cache["scale_caches"][s]
        g_attn = g_corr[:, i * per_scale:(i + 1) * per_scale]
        if cfg.corr_mode == "attention":
            g_emb, g_wq, g_wk = _attention_corr_backward(corr_cache, g_attn)
            grads[f"corr.s{s}.wq"] = g_wq
            grads[f"corr.s{s}.wk"] = g_wk
        else:
            g_emb = _tsm_corr_backward(corr_cache, g_attn)
        gw, gb, _ = _encode_batch_backward(enc_cache, g_emb)
        g_conv_w += gw
        g_conv_b += gb
    grads["encoder.conv.w"] = g_conv_w
    grads["encoder.conv.b"] = g_conv_b
    return grads


_MODE_FLAGS = {"attention": 0, "tsm": 1}
_FLAG_MODES = {v: k for k, v in _MODE_FLAGS.items()}


def save_model(path, params: dict, cfg: ModelConfig) -> None:
    """Checkpoint = every parameter tensor plus two self-describing meta rows."""
    tensors = dict(params)
    tensors["meta.config"] = np.array(
        [cfg.n_frames, cfg.s1, cfg.s2, cfg.d_f, cfg.d_e, cfg.heads, cfg.c_f,
         cfg.d_p, cfg.p_heads, cfg.d_ff, _MODE_FLAGS[cfg.corr_mode],
         int(cfg.use_posenc)], dtype=np.float64)
    tensors["meta.scales"] = np.array(cfg.scales, dtype=np.float64)
    write_racw(path, tensors)


def load_model(path):
    """Returns (params float64, ModelConfig) or raises ValidationError."""
    tensors = read_racw(path)
    if "meta.config" not in tensors or "meta.scales" not in tensors:
        raise ValidationError(f"{path}: missing meta tensors")
    m = tensors.pop("meta.config").astype(np.int64)
    scales = tuple(int(s) for s in tensors.pop("meta.scales"))
    if len(m) != 12:
        raise ValidationError(f"{path}: bad meta.config length {len(m)}")
    if int(m[10]) not in _FLAG_MODES:
        raise ValidationError(f"{path}: unknown correlation mode flag {int(m[10])}")
    cfg = ModelConfig(
        n_frames=int(m[0]), s1=int(m[1]), s2=int(m[2]), d_f=int(m[3]),
        d_e=int(m[4]), heads=int(m[5]), c_f=int(m[6]), d_p=int(m[7]),
        p_heads=int(m[8]), d_ff=int(m[9]), corr_mode=_FLAG_MODES[int(m[10])],
        use_posenc=bool(m[11]), scales=scales)
    expected = set(init_params(cfg, 0))
    got = set(tensors)
    if expected != got:
        missing, extra = expected - got, got - expected
        raise ValidationError(
            f"{path}: tensor names do not match config "
            f"(missing {sorted(missing)}, unexpected {sorted(extra)})")
    params = {k: tensors[k].astype(np.float64) for k in tensors}
    ref = init_params(cfg, 0)
    for k, v in params.items():
        if v.shape != ref[k].shape:
            raise ValidationError(
                f"{path}: tensor {k} has shape {v.shape}, expected {ref[k].shape}")
    return params, cfg
