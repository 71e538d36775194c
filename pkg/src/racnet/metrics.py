"""Counting metrics.

obo: fraction of videos whose prediction lands within one count of the truth
(inclusive, un-rounded predictions). mae: mean of |truth - pred| / truth,
defined only for positive ground truths; callers exclude zero-count videos.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _validate(preds, gts):
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if preds.ndim != 1 or preds.shape != gts.shape:
        raise ValidationError(f"preds {preds.shape} and gts {gts.shape} must be "
                              "equal-length vectors")
    if preds.size == 0:
        raise ValidationError("metrics need at least one video")
    if np.any(gts < 0):
        raise ValidationError("ground-truth counts must be >= 0")
    return preds, gts


def obo(preds, gts) -> float:
    preds, gts = _validate(preds, gts)
    return float(np.mean(np.abs(preds - gts) <= 1.0))


def mae(preds, gts) -> float:
    preds, gts = _validate(preds, gts)
    if np.any(gts <= 0):
        raise ValidationError("mae requires positive ground-truth counts; "
                              "exclude zero-count videos first")
    return float(np.mean(np.abs(gts - preds) / gts))
