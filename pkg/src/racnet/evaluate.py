"""Whole-pipeline evaluation and density-map plot emission."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ValidationError
from .metrics import mae as mae_metric
from .metrics import obo as obo_metric
from .model import forward
from .predictor import count_from_density
from .training import batch_arrays, prepare_example

STATUS_OK = "ok"
STATUS_ZERO_GT = "zero-gt"
STATUS_MISSING = "missing-features"


@dataclass(frozen=True)
class EvalRow:
    video_id: str
    gt_count: float
    pred_count: float
    abs_error: float
    status: str


@dataclass(frozen=True)
class EvalResult:
    mae: float
    obo: float
    rows: tuple[EvalRow, ...]
    excluded: int  # videos dropped for missing features

    @property
    def ok(self) -> bool:
        return self.excluded == 0


def predict_count(record, per_frame_feats: np.ndarray, params: dict,
                  cfg: ModelConfig, variant: str = "mid",
                  sigma_floor: float = 0.1) -> float:
    """Single-video pipeline: sample -> clips -> encode -> correlate -> density -> sum."""
    example = prepare_example(record, per_frame_feats, cfg, variant, sigma_floor)
    feats, _ = batch_arrays([example], cfg)
    density, _ = forward(params, cfg, feats)
    return count_from_density(density[0])


def evaluate(params: dict, cfg: ModelConfig, dataset, round_preds: bool = False,
             predict_fn=None) -> EvalResult:
    """dataset: iterable of (VideoRecord, per-frame features [T,S1,S2,d_f] or None).

    Videos without features become error rows and are excluded from both
    metrics; zero-count videos are excluded from mae but kept for obo.
    predict_fn(record, feats) -> count replaces the model pipeline in tests.
    """
    if predict_fn is None:
        def predict_fn(record, feats):
            return predict_count(record, feats, params, cfg)

    rows: list[EvalRow] = []
    for record, feats in dataset:
        gt = float(record.count)
        if feats is None:
            rows.append(EvalRow(record.video_id, gt, float("nan"), float("nan"),
                                STATUS_MISSING))
            continue
        pred = float(predict_fn(record, feats))
        if round_preds:
            pred = float(np.rint(pred))
        status = STATUS_OK if gt > 0 else STATUS_ZERO_GT
        rows.append(EvalRow(record.video_id, gt, pred, abs(gt - pred), status))
    rows.sort(key=lambda r: r.video_id)

    scored = [r for r in rows if r.status != STATUS_MISSING]
    if not scored:
        raise ValidationError("no videos with features to evaluate")
    obo_val = obo_metric([r.pred_count for r in scored], [r.gt_count for r in scored])
    positive = [r for r in scored if r.gt_count > 0]
    mae_val = (mae_metric([r.pred_count for r in positive],
                          [r.gt_count for r in positive])
               if positive else float("nan"))
    return EvalResult(mae=mae_val, obo=obo_val, rows=tuple(rows),
                      excluded=len(rows) - len(scored))


def write_report(path, result: EvalResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("video_id,gt_count,pred_count,abs_error,status\n")
        for r in result.rows:
            fh.write(f"{r.video_id},{r.gt_count!r},{r.pred_count!r},"
                     f"{r.abs_error!r},{r.status}\n")
        fh.write(f"__summary__,mae={result.mae!r},obo={result.obo!r},"
                 f"excluded={result.excluded},\n")


def _scaled_row(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros(values.size, dtype=np.uint8)
    return np.round((values - lo) / (hi - lo) * 255.0).astype(np.uint8)


def emit_plot(pred: np.ndarray, target: np.ndarray | None, path_prefix) -> tuple[str, str]:
    """Writes <prefix>.csv and <prefix>.pgm; returns both paths.

    The PGM is a strip: row 1 the prediction, row 2 the target when present,
    each min-max scaled to 0..255 independently.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 1:
        raise ValidationError(f"pred must be a vector, got shape {pred.shape}")
    if target is not None:
        target = np.asarray(target, dtype=np.float64)
        if target.shape != pred.shape:
            raise ValidationError(f"target shape {target.shape} != pred {pred.shape}")

    csv_path = f"{path_prefix}.csv"
    pgm_path = f"{path_prefix}.pgm"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        if target is None:
            fh.write("frame,pred\n")
            for i, p in enumerate(pred.tolist()):
                fh.write(f"{i},{p!r}\n")
        else:
            fh.write("frame,pred,target\n")
            for i, (p, t) in enumerate(zip(pred.tolist(), target.tolist())):
                fh.write(f"{i},{p!r},{t!r}\n")

    rows = [_scaled_row(pred)]
    if target is not None:
        rows.append(_scaled_row(target))
    image = np.stack(rows)
    with open(pgm_path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
    return csv_path, pgm_path
