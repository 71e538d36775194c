"""Shared builders for the test suite."""

import os

import numpy as np

from racnet import CycleSpan, VideoRecord, serialize_annotations
from racnet.fileio import write_racf


def make_record(vid="vid", n_frames=64, cycles=((4, 11), (20, 33)), fps=30.0,
                action_type="osc"):
    spans = tuple(CycleSpan(s, e) for s, e in cycles)
    return VideoRecord(vid, action_type, n_frames, fps, spans)


def random_records(rng, n_videos, max_frames=600):
    """Valid records with random disjoint cycle spans, for property tests."""
    records = []
    for i in range(n_videos):
        fc = int(rng.integers(8, max_frames))
        spans = []
        pos = 0
        for _ in range(int(rng.integers(0, 6))):
            start = pos + int(rng.integers(0, 5))
            length = int(rng.integers(1, 20))
            if start + length > fc:
                break
            spans.append((start, start + length - 1))
            pos = start + length
        records.append(make_record(f"v{i:03d}", fc, tuple(spans),
                                   fps=float(rng.choice([24.0, 30.0, 30.5]))))
    return records


def write_dataset(dirpath, records, features):
    """Lay out a data directory: annotations.csv plus one RACF per video."""
    os.makedirs(dirpath, exist_ok=True)
    ann_path = os.path.join(dirpath, "annotations.csv")
    with open(ann_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_annotations(records))
    for rec in records:
        if rec.video_id in features:
            write_racf(os.path.join(dirpath, f"{rec.video_id}.racf"),
                       np.asarray(features[rec.video_id], dtype=np.float32))
    return ann_path
