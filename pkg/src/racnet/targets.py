"""Density-map targets: one unit of Gaussian mass per annotated cycle.

Bin k of a cycle's map carries the integral of a normal density over
[k-0.5, k+0.5]; sigma comes from the span length so that +-3 sigma covers
the span, and each span's map is renormalized to sum exactly 1, making the
map's linear sum equal the cycle count.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError, ValidationError

VARIANTS = ("begin", "mid", "end", "merge")


def normal_cdf(z: float) -> float:
    """Standard normal CDF via math.erf (double precision, ~1e-16 accurate)."""
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def gaussian_bin_mass(mu: float, sigma: float, k: int) -> float:
    """Mass of N(mu, sigma^2) inside the unit bin centered at integer k."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    return normal_cdf((k + 0.5 - mu) / sigma) - normal_cdf((k - 0.5 - mu) / sigma)


def _single_variant_target(spans, n: int, variant: str, sigma_floor: float) -> np.ndarray:
    out = np.zeros(n, dtype=np.float64)
    ks = np.arange(n)
    for span in spans:
        s, e = span.start_frame, span.end_frame
        if s < 0 or e >= n:
            raise ValidationError(f"span ({s},{e}) outside [0,{n})")
        sigma = max((e - s) / 6.0, sigma_floor)
        mu = {"begin": float(s), "mid": (s + e) / 2.0, "end": float(e)}[variant]
        raw = np.array([gaussian_bin_mass(mu, sigma, int(k)) for k in ks])
        total = raw.sum()
        if total <= 0:
            raise NumericError(f"span ({s},{e}): zero mass inside [0,{n})")
        out += raw / total
    return out


def make_density_target(spans, n: int, variant: str, sigma_floor: float = 0.1) -> np.ndarray:
    """Length-n target whose sum equals len(spans); merge averages the three
    single-position variants."""
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if n < 1:
        raise ValidationError("n must be >= 1")
    if sigma_floor <= 0:
        raise ValidationError("sigma_floor must be > 0")
    if variant == "merge":
        parts = [_single_variant_target(spans, n, v, sigma_floor)
                 for v in ("begin", "mid", "end")]
        return (parts[0] + parts[1] + parts[2]) / 3.0
    return _single_variant_target(spans, n, variant, sigma_floor)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over all entries."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))
