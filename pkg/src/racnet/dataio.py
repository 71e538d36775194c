"""Annotation parsing, dataset statistics, splits, and synthetic sequences.

Annotation CSV format: header `video_id,action_type,frame_count,fps,start_frame,end_frame`,
one row per cycle; a video with zero cycles appears exactly once with empty
start/end fields. UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

ANNOTATION_HEADER = ("video_id", "action_type", "frame_count", "fps", "start_frame", "end_frame")


@dataclass(frozen=True, order=True)
class CycleSpan:
    """One repetition, as an inclusive frame-index interval."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.end_frame < self.start_frame:
            raise ValidationError(
                f"cycle end {self.end_frame} precedes start {self.start_frame}"
            )
        if self.start_frame < 0:
            raise ValidationError(f"negative start_frame {self.start_frame}")


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    action_type: str
    frame_count: int
    fps: float
    cycles: tuple[CycleSpan, ...]

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValidationError(f"{self.video_id}: frame_count must be >= 1")
        if not (self.fps > 0):
            raise ValidationError(f"{self.video_id}: fps must be > 0")
        for c in self.cycles:
            if c.end_frame >= self.frame_count:
                raise ValidationError(
                    f"{self.video_id}: cycle end {c.end_frame} outside "
                    f"frame_count {self.frame_count}"
                )

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def duration_seconds(self) -> float:
        return self.frame_count / self.fps


@dataclass(frozen=True)
class DatasetStats:
    num_videos: int
    duration_mean: float
    duration_std: float
    duration_min: float
    duration_max: float
    count_mean: float
    count_std: float
    count_min: int
    count_max: int


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic feature sequence."""

    num_frames: int
    cycle_length_range: tuple[int, int]
    num_cycles: int
    interruption_segments: tuple[tuple[int, int], ...] = ()  # (start, length) pairs
    jitter: float = 0.0
    noise_sigma: float = 0.0
    d_f: int = 16
    s1: int = 2
    s2: int = 2

    def __post_init__(self):
        lo, hi = self.cycle_length_range
        if self.num_cycles < 0:
            raise ValidationError("num_cycles must be >= 0")
        if self.num_cycles > 0 and lo < 2:
            raise ValidationError("min cycle length must be >= 2")
        if lo > hi:
            raise ValidationError("cycle_length_range min exceeds max")
        if self.jitter < 0 or self.noise_sigma < 0:
            raise ValidationError("jitter and noise_sigma must be >= 0")
        if self.num_frames < 1:
            raise ValidationError("num_frames must be >= 1")
        prev_end = -1
        for start, length in sorted(self.interruption_segments):
            if start < 0 or length < 1 or start + length > self.num_frames:
                raise ValidationError(f"interruption ({start},{length}) out of range")
            if start <= prev_end:
                raise ValidationError("interruption segments overlap")
            prev_end = start + length - 1


@dataclass(frozen=True)
class Split:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    mode: str


def parse_annotations(text: str) -> list[VideoRecord]:
    """Parse the annotation CSV into one VideoRecord per video, cycles sorted."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty annotation file", line=1) from None
    if tuple(h.strip() for h in header) != ANNOTATION_HEADER:
        raise ParseError(f"bad header {header!r}", line=1)

    meta: dict[str, tuple[str, int, float]] = {}
    cycles: dict[str, list[CycleSpan]] = {}
    empty_row: dict[str, int] = {}
    order: list[str] = []

    for lineno, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != 6:
            raise ParseError(f"expected 6 fields, got {len(row)}", line=lineno)
        vid, atype, fc_s, fps_s, start_s, end_s = (f.strip() for f in row)
        if not vid:
            raise ParseError("empty video_id", line=lineno)
        try:
            fc = int(fc_s)
            fps = float(fps_s)
        except ValueError:
            raise ParseError(f"bad frame_count/fps {fc_s!r}/{fps_s!r}", line=lineno) from None
        if vid not in meta:
            meta[vid] = (atype, fc, fps)
            cycles[vid] = []
            order.append(vid)
        elif meta[vid] != (atype, fc, fps):
            raise ParseError(f"inconsistent metadata for video {vid!r}", line=lineno)

        if start_s == "" and end_s == "":
            if vid in empty_row:
                raise ParseError(f"duplicate zero-cycle row for {vid!r}", line=lineno)
            empty_row[vid] = lineno
            continue
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise ParseError(f"bad cycle bounds {start_s!r}/{end_s!r}", line=lineno) from None
        if end < start:
            raise ValidationError(f"line {lineno}: cycle end {end} precedes start {start}")
        if start < 0 or end >= fc:
            raise ValidationError(
                f"line {lineno}: cycle ({start},{end}) outside frame_count {fc}"
            )
        cycles[vid].append(CycleSpan(start, end))

    for vid, lineno in empty_row.items():
        if cycles[vid]:
            raise ParseError(
                f"video {vid!r} has both a zero-cycle row and cycle rows", line=lineno
            )

    records = []
    for vid in order:
        atype, fc, fps = meta[vid]
        spans = tuple(sorted(cycles[vid], key=lambda c: (c.start_frame, c.end_frame)))
        records.append(VideoRecord(vid, atype, fc, fps, spans))
    return records


def _fmt_fps(fps: float) -> str:
    return repr(int(fps)) if float(fps).is_integer() else repr(fps)


def serialize_annotations(records: list[VideoRecord]) -> str:
    """Inverse of parse_annotations; parse(serialize(r)) == r."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ANNOTATION_HEADER)
    for rec in records:
        base = [rec.video_id, rec.action_type, str(rec.frame_count), _fmt_fps(rec.fps)]
        if not rec.cycles:
            writer.writerow(base + ["", ""])
        for c in rec.cycles:
            writer.writerow(base + [str(c.start_frame), str(c.end_frame)])
    return out.getvalue()


def dataset_stats(records: list[VideoRecord]) -> DatasetStats:
    """Duration (seconds) and count statistics; std is population std."""
    if not records:
        raise ValidationError("dataset_stats requires a nonempty record list")
    durations = np.array([r.duration_seconds for r in records], dtype=np.float64)
    counts = np.array([r.count for r in records], dtype=np.float64)
    return DatasetStats(
        num_videos=len(records),
        duration_mean=float(durations.mean()),
        duration_std=float(durations.std()),
        duration_min=float(durations.min()),
        duration_max=float(durations.max()),
        count_mean=float(counts.mean()),
        count_std=float(counts.std()),
        count_min=int(counts.min()),
        count_max=int(counts.max()),
    )


def _check_ratios(ratios):
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValidationError("ratios must be three nonnegative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")


def split_dataset(records, mode: str, seed: int, ratios=(0.7, 0.15, 0.15)) -> Split:
    """Partition video ids into train/val/test.

    Regular mode shuffles videos with the seed. Open-set mode assigns whole
    action types greedily (largest type first, lexicographic tie-break) to the
    partition furthest below its target share, so no type straddles partitions.
    """
    _check_ratios(ratios)
    if mode not in ("regular", "open-set"):
        raise ValidationError(f"unknown split mode {mode!r}")
    n = len(records)
    if n == 0:
        raise ValidationError("cannot split an empty dataset")

    if mode == "regular":
        ids = [r.video_id for r in records]
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        n_train = min(n, int(math.floor(n * ratios[0] + 0.5)))
        n_val = min(n - n_train, int(math.floor(n * ratios[1] + 0.5)))
        shuffled = [ids[i] for i in perm]
        return Split(
            train=tuple(shuffled[:n_train]),
            val=tuple(shuffled[n_train:n_train + n_val]),
            test=tuple(shuffled[n_train + n_val:]),
            mode=mode,
        )

    by_type: dict[str, list[str]] = {}
    for r in records:
        by_type.setdefault(r.action_type, []).append(r.video_id)
    if len(by_type) < 3:
        raise ValidationError(
            f"open-set split needs >= 3 distinct action types, got {len(by_type)}"
        )
    # largest types first so the greedy fill tracks the targets closely
    type_order = sorted(by_type, key=lambda t: (-len(by_type[t]), t))
    targets = [n * r for r in ratios]
    buckets: list[list[str]] = [[], [], []]
    for t in type_order:
        deficits = [targets[i] - len(buckets[i]) for i in range(3)]
        dest = max(range(3), key=lambda i: (deficits[i], -i))
        buckets[dest].extend(by_type[t])
    return Split(tuple(buckets[0]), tuple(buckets[1]), tuple(buckets[2]), mode)


# Oscillation directions are shared across all synthetic videos so that the
# "same phase" signal is consistent; only the per-video base pattern and noise
# vary with the caller's seed.
_DIRECTION_SEED = 0x5EED


def _direction_grids(s1: int, s2: int, d_f: int):
    rng = np.random.default_rng(_DIRECTION_SEED)
    u = rng.normal(0.0, 1.0, size=(s1, s2, d_f))
    v = rng.normal(0.0, 1.0, size=(s1, s2, d_f))
    u /= max(float(np.linalg.norm(u)), 1e-12)
    v /= max(float(np.linalg.norm(v)), 1e-12)
    return u * math.sqrt(s1 * s2 * d_f), v * math.sqrt(s1 * s2 * d_f)


def generate_synthetic(spec: SynthSpec, seed: int):
    """Build one feature sequence [T, S1, S2, d_f] (float32) plus its true spans.

    Each cycle contributes a sinusoidal component whose phase runs 0..2pi
    across the span; interruptions and gaps carry only the base pattern and
    noise. First-fit packing left to right around the interruption segments.
    """
    rng = np.random.default_rng(seed)
    T = spec.num_frames
    lo, hi = spec.cycle_length_range

    lengths = []
    for _ in range(spec.num_cycles):
        base = int(rng.integers(lo, hi + 1))
        if spec.jitter > 0:
            factor = 1.0 + rng.uniform(-spec.jitter, spec.jitter)
            base = int(np.clip(round(base * factor), lo, hi))
        lengths.append(max(base, 2))

    blocked = sorted(spec.interruption_segments)
    free: list[list[int]] = []  # [start, end) runs outside interruptions
    pos = 0
    for start, length in blocked:
        if start > pos:
            free.append([pos, start])
        pos = max(pos, start + length)
    if pos < T:
        free.append([pos, T])

    spans: list[CycleSpan] = []
    seg = 0
    for length in lengths:
        while seg < len(free) and free[seg][1] - free[seg][0] < length:
            seg += 1
        if seg >= len(free):
            raise ValidationError(
                f"cannot pack {spec.num_cycles} cycles into {T} frames "
                f"around {len(blocked)} interruptions"
            )
        s = free[seg][0]
        spans.append(CycleSpan(s, s + length - 1))
        free[seg][0] += length

    base_pattern = rng.normal(0.0, 0.5, size=(spec.s1, spec.s2, spec.d_f))
    u, v = _direction_grids(spec.s1, spec.s2, spec.d_f)
    features = np.broadcast_to(base_pattern, (T, spec.s1, spec.s2, spec.d_f)).copy()
    for span in spans:
        period = span.end_frame - span.start_frame + 1
        t = np.arange(span.start_frame, span.end_frame + 1)
        phase = 2.0 * math.pi * (t - span.start_frame) / period
        features[span.start_frame:span.end_frame + 1] += (
            np.sin(phase)[:, None, None, None] * u[None]
            + np.cos(phase)[:, None, None, None] * v[None]
        )
    if spec.noise_sigma > 0:
        features += rng.normal(0.0, spec.noise_sigma, size=features.shape)
    return features.astype(np.float32), spans


@dataclass(frozen=True)
class SynthSetSpec:
    """Recipe for a whole synthetic dataset (one SynthSpec drawn per video)."""

    num_videos: int
    num_frames: int = 64
    cycle_count_range: tuple[int, int] = (5, 12)
    interruption_count_range: tuple[int, int] = (1, 2)
    interruption_length_range: tuple[int, int] = (2, 4)
    jitter: float = 0.3
    noise_sigma: float = 0.05
    d_f: int = 16
    s1: int = 2
    s2: int = 2
    # None: cycle length adapts to the drawn count. A list of (lo, hi) pairs
    # assigns fixed ranges round-robin by video index (mixed-speed sets).
    cycle_length_choices: tuple[tuple[int, int], ...] | None = None
    action_types: tuple[str, ...] = ("osc",)

    def __post_init__(self):
        if self.num_videos < 1:
            raise ValidationError("num_videos must be >= 1")
        if not self.action_types:
            raise ValidationError("action_types must be nonempty")


def generate_synthetic_set(set_spec: SynthSetSpec, seed: int):
    """Draw records + features for a dataset; deterministic per seed.

    Returns (records, features) with features keyed by video_id.
    """
    master = np.random.SeedSequence(seed)
    children = master.spawn(set_spec.num_videos)
    records: list[VideoRecord] = []
    features: dict[str, np.ndarray] = {}
    T = set_spec.num_frames

    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        n_cyc = int(rng.integers(set_spec.cycle_count_range[0],
                                 set_spec.cycle_count_range[1] + 1))

        k_lo, k_hi = set_spec.interruption_count_range
        n_int = int(rng.integers(k_lo, k_hi + 1)) if k_hi > 0 else 0
        int_lengths = [
            int(rng.integers(set_spec.interruption_length_range[0],
                             set_spec.interruption_length_range[1] + 1))
            for _ in range(n_int)
        ]

        if set_spec.cycle_length_choices is not None:
            length_range = set_spec.cycle_length_choices[i % len(set_spec.cycle_length_choices)]
        else:
            # longest length such that n_cyc max-length cycles pack for sure,
            # allowing one wasted tail per free segment
            budget = T - sum(int_lengths)
            k = len(int_lengths)
            hi = (budget + k + 1) // (n_cyc + k + 1) if n_cyc > 0 else 2
            if hi < 2:
                int_lengths, k = [], 0
                hi = (T + 1) // (n_cyc + 1) if n_cyc > 0 else 2
            if hi < 2:
                raise ValidationError(
                    f"video {i}: cannot fit {n_cyc} cycles in {T} frames"
                )
            length_range = (max(2, hi - 1), hi)

        segments: list[tuple[int, int]] = []
        for length in int_lengths:
            for _ in range(50):
                start = int(rng.integers(0, T - length + 1))
                if all(start + length <= s or start >= s + l for s, l in segments):
                    segments.append((start, length))
                    break
        segments.sort()

        vid_seed = int(child.generate_state(1)[0])
        while True:
            spec = SynthSpec(
                num_frames=T,
                cycle_length_range=length_range,
                num_cycles=n_cyc,
                interruption_segments=tuple(segments),
                jitter=set_spec.jitter,
                noise_sigma=set_spec.noise_sigma,
                d_f=set_spec.d_f,
                s1=set_spec.s1,
                s2=set_spec.s2,
            )
            try:
                feats, spans = generate_synthetic(spec, vid_seed)
                break
            except ValidationError:
                # fixed length ranges can overflow the frame budget; relax by
                # dropping interruptions first, then cycles
                if segments:
                    segments = segments[:-1]
                elif n_cyc > 0:
                    n_cyc -= 1
                else:
                    raise
        vid = f"synth_{i:04d}"
        records.append(VideoRecord(
            video_id=vid,
            action_type=set_spec.action_types[i % len(set_spec.action_types)],
            frame_count=T,
            fps=30.0,
            cycles=tuple(spans),
        ))
        features[vid] = feats
    return records, features
