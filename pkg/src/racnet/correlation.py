"""Pairwise temporal correlation between frame embeddings.

Attention mode: per head, scaled dot-product scores between learned query and
key projections, row-softmaxed; the normalized score matrix itself is the
output channel. Distance mode: a single channel per scale built from negative
squared euclidean distances. Channels fuse scale-major, head-minor.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ValidationError
from .nnops import softmax_lastdim


def attention_correlation(x: np.ndarray, wq: np.ndarray, wk: np.ndarray) -> np.ndarray:
    """x [N, d_e], wq/wk [H, d_e, d_h] -> [N, N, H] of row-normalized scores."""
    if x.ndim != 2 or wq.shape != wk.shape or x.shape[1] != wq.shape[1]:
        raise ValidationError(
            f"inconsistent shapes x={x.shape} wq={wq.shape} wk={wk.shape}"
        )
    d_h = wq.shape[2]
    q = np.einsum("nd,hdk->hnk", x, wq)
    k = np.einsum("nd,hdk->hnk", x, wk)
    scores = q @ k.transpose(0, 2, 1) / np.sqrt(d_h)
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite attention scores")
    return softmax_lastdim(scores).transpose(1, 2, 0)


def tsm_scores(x: np.ndarray) -> np.ndarray:
    """Pre-softmax similarity: -||x_i - x_j||^2 / sqrt(d_e), shape [N, N].

    Float round-off can leave the Gram expansion slightly asymmetric or
    negative; symmetrize and clamp so the exact distance identities (zero
    diagonal, symmetry, nonpositivity) hold bit-for-bit.
    """
    sq = (x * x).sum(axis=1)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    dist2 = np.maximum(0.5 * (dist2 + dist2.T), 0.0)
    np.fill_diagonal(dist2, 0.0)
    return -dist2 / np.sqrt(x.shape[1])


def tsm_correlation(x: np.ndarray) -> np.ndarray:
    """x [N, d_e] -> [N, N, 1]: row-softmax of the distance similarity."""
    if x.ndim != 2:
        raise ValidationError(f"expected [N, d_e], got {x.shape}")
    return softmax_lastdim(tsm_scores(x))[:, :, None]


def fuse_scales(per_scale: list[np.ndarray]) -> np.ndarray:
    """Concatenate per-scale [N, N, H] tensors along channels, scale order."""
    if not per_scale:
        raise ValidationError("fuse_scales needs at least one tensor")
    shape = per_scale[0].shape
    if any(t.shape != shape for t in per_scale):
        raise ValidationError(
            f"scale tensors disagree in shape: {[t.shape for t in per_scale]}"
        )
    return np.concatenate(per_scale, axis=2)
