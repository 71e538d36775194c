"""Per-clip feature provision, temporal-context convolution, spatial max-pool.

The feature provider stands in for a frozen pretrained backbone: it turns a
clip (a window of sampled-frame positions) into one [S1, S2, d_f] grid. The
trainable part starts at the 3D convolution.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericError, ValidationError
from .nnops import relu
from .sampling import ClipSet


@dataclass(frozen=True)
class EmbeddingSequence:
    values: np.ndarray  # [N, d_e]
    scale: int


class FeatureProvider(abc.ABC):
    """Maps a clip of sampled-frame positions to one spatial-grid feature."""

    def __init__(self, s1: int, s2: int, d_f: int):
        self.s1, self.s2, self.d_f = s1, s2, d_f

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.s1, self.s2, self.d_f)

    @abc.abstractmethod
    def features_for(self, positions: np.ndarray) -> np.ndarray:
        """positions: resolved (pad-free) sampled positions of one clip -> [S1, S2, d_f]."""


class GridFeatureProvider(FeatureProvider):
    """Serves precomputed per-frame grids; a clip is the mean of its members.

    `sampled` holds the grid for each of the N sampled frames.
    """

    def __init__(self, sampled: np.ndarray):
        if sampled.ndim != 4:
            raise ValidationError(f"expected [N, S1, S2, d_f] grids, got {sampled.shape}")
        super().__init__(*sampled.shape[1:])
        self.sampled = np.asarray(sampled, dtype=np.float64)

    @classmethod
    def from_source(cls, per_frame: np.ndarray, indices) -> "GridFeatureProvider":
        """Index per-source-frame grids [T, S1, S2, d_f] down to the sampled frames."""
        return cls(np.asarray(per_frame)[np.asarray(indices)])

    def features_for(self, positions: np.ndarray) -> np.ndarray:
        return self.sampled[positions].mean(axis=0)


class ConstantFeatureProvider(FeatureProvider):
    def __init__(self, grid: np.ndarray):
        if grid.ndim != 3:
            raise ValidationError(f"expected [S1, S2, d_f] grid, got {grid.shape}")
        super().__init__(*grid.shape)
        self.grid = np.asarray(grid, dtype=np.float64)

    def features_for(self, positions: np.ndarray) -> np.ndarray:
        return self.grid


def provide_features(clipset: ClipSet, provider: FeatureProvider) -> np.ndarray:
    """Stack provider outputs for every clip -> [N, S1, S2, d_f]."""
    resolved = clipset.resolved()
    n = resolved.shape[0]
    out = np.empty((n, provider.s1, provider.s2, provider.d_f), dtype=np.float64)
    for t in range(n):
        grid = np.asarray(provider.features_for(resolved[t]), dtype=np.float64)
        if grid.shape != (provider.s1, provider.s2, provider.d_f):
            raise ValidationError(
                f"provider returned shape {grid.shape}, declared {provider.dims}"
            )
        if not np.all(np.isfinite(grid)):
            raise NumericError(f"non-finite provider output at clip {t}")
        out[t] = grid
    return out


def temporal_context(features: np.ndarray, conv_w: np.ndarray, conv_b: np.ndarray) -> np.ndarray:
    """3D convolution over (time, height, width), same padding, then ReLU.

    features: [N, S1, S2, d_f]; conv_w: [3, 3, 3, d_f, d_e]; conv_b: [d_e].
    Returns [N, S1, S2, d_e].
    """
    if features.ndim != 4 or features.shape[3] != conv_w.shape[3]:
        raise ValidationError(
            f"features {features.shape} incompatible with kernel {conv_w.shape}"
        )
    x = features.transpose(3, 0, 1, 2)[None]  # [1, d_f, N, S1, S2]
    w = np.ascontiguousarray(conv_w.transpose(4, 3, 0, 1, 2))
    y = kernels.conv3d_forward(np.ascontiguousarray(x), w, conv_b)
    return relu(y[0].transpose(1, 2, 3, 0))


def spatial_maxpool(x: np.ndarray) -> np.ndarray:
    """Global max over the grid axes: [N, S1, S2, d_e] -> [N, d_e]."""
    if x.ndim != 4:
        raise ValidationError(f"expected [N, S1, S2, d_e], got {x.shape}")
    return x.max(axis=(1, 2))


def encode_scale(clipset: ClipSet, provider: FeatureProvider,
                 conv_w: np.ndarray, conv_b: np.ndarray) -> EmbeddingSequence:
    """provide -> temporal context conv+ReLU -> spatial max-pool."""
    feats = provide_features(clipset, provider)
    ctx = temporal_context(feats, conv_w, conv_b)
    return EmbeddingSequence(values=spatial_maxpool(ctx), scale=clipset.scale)
