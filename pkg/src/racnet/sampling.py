"""Frame sampling and multi-scale sliding-window clip construction.

A video of any length is reduced to N sampled frames; each scale then tiles
those N positions with windows of `scale` frames. Scales 4 and 8 slide with
strides 2 and 4, which yields fewer than N windows, so each raw window is
repeated `stride` times to restore a length-N clip sequence. Window positions
past the end are marked PAD (-1); consumers substitute the last valid
position in the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import CycleSpan
from .errors import ValidationError

PAD = -1

SCALE_STRIDES = {1: 1, 4: 2, 8: 4}


@dataclass(frozen=True)
class SampledIndexMap:
    indices: tuple[int, ...]
    N: int
    source_frame_count: int


@dataclass(frozen=True)
class ClipSet:
    scale: int
    stride: int
    clips: np.ndarray  # [N, scale] int array of sampled positions, PAD for out-of-range

    @property
    def N(self) -> int:
        return self.clips.shape[0]

    def resolved(self) -> np.ndarray:
        """Clips with PAD replaced by the last valid position in the window."""
        out = self.clips.copy()
        for t in range(out.shape[0]):
            last = 0
            for j in range(out.shape[1]):
                if out[t, j] == PAD:
                    out[t, j] = last
                else:
                    last = out[t, j]
        return out


def sample_frames(frame_count: int, N: int) -> SampledIndexMap:
    """Uniformly spaced frame indices; short videos pad by repeating the last."""
    if frame_count < 1 or N < 1:
        raise ValidationError("frame_count and N must be >= 1")
    if frame_count >= N:
        indices = tuple(k * frame_count // N for k in range(N))
    else:
        indices = tuple(range(frame_count)) + (frame_count - 1,) * (N - frame_count)
    return SampledIndexMap(indices=indices, N=N, source_frame_count=frame_count)


def map_cycles_to_samples(cycles, frame_count: int, N: int) -> list[CycleSpan]:
    """Rescale cycle boundaries from source-frame space to sample space.

    Each boundary b maps to round(b * N / frame_count), half away from zero,
    clamped to [0, N-1]; spans that invert after mapping collapse to their
    mapped start index.
    """
    out = []
    for c in cycles:
        if c.end_frame >= frame_count:
            raise ValidationError(
                f"cycle ({c.start_frame},{c.end_frame}) outside frame_count {frame_count}"
            )
        s = min(max(int(np.floor(c.start_frame * N / frame_count + 0.5)), 0), N - 1)
        e = min(max(int(np.floor(c.end_frame * N / frame_count + 0.5)), 0), N - 1)
        if e < s:
            e = s
        out.append(CycleSpan(s, e))
    return out


def build_clipset(N: int, scale: int) -> ClipSet:
    """Sliding windows of `scale` positions over 0..N-1 at the scale's stride.

    Raw window w starts at w*stride; positions >= N are PAD. Each raw window
    is repeated `stride` times so the clip sequence has exactly N entries
    (clip t uses raw window t // stride).
    """
    if scale not in SCALE_STRIDES:
        raise ValidationError(f"scale must be one of {sorted(SCALE_STRIDES)}, got {scale}")
    if N < 1:
        raise ValidationError("N must be >= 1")
    stride = SCALE_STRIDES[scale]
    starts = np.arange(0, N, stride)
    raw = starts[:, None] + np.arange(scale)[None, :]
    raw = np.where(raw < N, raw, PAD)
    clips = raw[np.arange(N) // stride]
    return ClipSet(scale=scale, stride=stride, clips=clips.astype(np.int64))
