"""Command-line interface.

Exit codes: 0 success, 1 validation/input error, 2 runtime or numeric error.
Data directories hold one `annotations.csv` plus one `<video_id>.racf`
feature file per video.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import (TARGET_VARIANTS, TrainConfig, load_train_config,
                     model_config_for)
from .dataio import (SynthSetSpec, dataset_stats, generate_synthetic_set,
                     parse_annotations, serialize_annotations, split_dataset)
from .errors import NumericError, ValidationError
from .evaluate import emit_plot, evaluate, write_report
from .fileio import read_racf, write_loss_history, write_racf
from .model import load_model, save_model
from .predictor import count_from_density
from .sampling import map_cycles_to_samples
from .targets import make_density_target
from .training import grad_check, prepare_example, train


def _read_annotations(path) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    return parse_annotations(text)


def _load_data_dir(data_dir, require_all: bool):
    """Returns (records, {video_id: features or None})."""
    root = Path(data_dir)
    records = _read_annotations(root / "annotations.csv")
    feats = {}
    for rec in records:
        racf = root / f"{rec.video_id}.racf"
        if racf.exists():
            feats[rec.video_id] = read_racf(racf)
        elif require_all:
            raise ValidationError(f"missing feature file {racf}")
        else:
            feats[rec.video_id] = None
    return records, feats


def cmd_stats(args) -> int:
    stats = dataset_stats(_read_annotations(args.annotations))
    print(f"videos          {stats.num_videos}")
    print(f"duration mean   {stats.duration_mean:.3f} s")
    print(f"duration std    {stats.duration_std:.3f} s")
    print(f"duration min    {stats.duration_min:.3f} s")
    print(f"duration max    {stats.duration_max:.3f} s")
    print(f"count mean      {stats.count_mean:.3f}")
    print(f"count std       {stats.count_std:.3f}")
    print(f"count min       {stats.count_min}")
    print(f"count max       {stats.count_max}")
    return 0


def _parse_ratios(text: str):
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ValidationError(f"bad ratios {text!r}") from None
    return parts


def cmd_split(args) -> int:
    records = _read_annotations(args.annotations)
    split = split_dataset(records, args.mode, args.seed, _parse_ratios(args.ratios))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ids in (("train", split.train), ("val", split.val), ("test", split.test)):
        (out / f"{name}.txt").write_text("".join(f"{i}\n" for i in ids),
                                         encoding="utf-8")
    print(f"train {len(split.train)}  val {len(split.val)}  test {len(split.test)}")
    return 0


_SET_SPEC_FIELDS = {f.name for f in dataclasses.fields(SynthSetSpec)}


def _set_spec_from_json(path) -> SynthSetSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: spec must be a JSON object")
    unknown = set(data) - _SET_SPEC_FIELDS
    if unknown:
        raise ValidationError(f"{path}: unknown spec keys {sorted(unknown)}")
    for key in ("cycle_count_range", "interruption_count_range",
                "interruption_length_range", "action_types"):
        if key in data:
            data[key] = tuple(data[key])
    if data.get("cycle_length_choices") is not None and "cycle_length_choices" in data:
        data["cycle_length_choices"] = tuple(tuple(c) for c in data["cycle_length_choices"])
    try:
        return SynthSetSpec(**data)
    except TypeError as exc:
        raise ValidationError(f"{path}: bad spec: {exc}") from exc


def cmd_synth(args) -> int:
    spec = _set_spec_from_json(args.spec)
    records, features = generate_synthetic_set(spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "annotations.csv").write_text(serialize_annotations(records),
                                         encoding="utf-8")
    for rec in records:
        write_racf(out / f"{rec.video_id}.racf", features[rec.video_id])
    print(f"wrote {len(records)} videos to {out}")
    return 0


def cmd_make_targets(args) -> int:
    records = _read_annotations(args.annotations)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        spans = map_cycles_to_samples(rec.cycles, rec.frame_count, args.n)
        target = make_density_target(spans, args.n, args.variant, args.sigma_floor)
        with open(out / f"{rec.video_id}_target.csv", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("frame,target\n")
            for i, val in enumerate(target.tolist()):
                fh.write(f"{i},{val!r}\n")
    print(f"wrote {len(records)} target files to {out}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.config:
        tcfg = load_train_config(args.config)
    else:
        tcfg = TrainConfig(n_frames=8)
    cfg = model_config_for(tcfg, preset=args.preset)
    report = grad_check(cfg, seed=args.seed, eps=args.eps)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 2


def cmd_train(args) -> int:
    tcfg = load_train_config(args.config)
    records, feats = _load_data_dir(args.data, require_all=True)
    first = feats[records[0].video_id]
    cfg = model_config_for(tcfg, preset=args.preset,
                           s1=first.shape[1], s2=first.shape[2], d_f=first.shape[3])
    examples = [prepare_example(rec, feats[rec.video_id], cfg,
                                tcfg.variant, tcfg.sigma_floor)
                for rec in records]
    params, history = train(examples, tcfg, cfg)
    save_model(args.out, params, cfg)
    loss_path = _loss_path(args.out)
    write_loss_history(loss_path, history)
    final = history[-1][1] if history else float("nan")
    print(f"trained {tcfg.steps} steps on {len(examples)} videos; "
          f"final loss {final:.6g}")
    print(f"checkpoint {args.out}; loss history {loss_path}")
    return 0


def _loss_path(model_path) -> str:
    text = str(model_path)
    if text.endswith(".racw"):
        return text[:-5] + ".loss.csv"
    return text + ".loss.csv"


def cmd_eval(args) -> int:
    params, cfg = load_model(args.model)
    records, feats = _load_data_dir(args.data, require_all=False)
    dataset = [(rec, feats[rec.video_id]) for rec in records]
    result = evaluate(params, cfg, dataset, round_preds=args.round)
    write_report(args.report, result)
    print(f"mae {result.mae:.4f}  obo {result.obo:.4f}  "
          f"videos {len(result.rows)}  excluded {result.excluded}")
    return 0 if result.ok else 1


def cmd_plot(args) -> int:
    params, cfg = load_model(args.model)
    records, feats = _load_data_dir(args.data, require_all=False)
    by_id = {rec.video_id: rec for rec in records}
    if args.video not in by_id:
        raise ValidationError(f"video {args.video!r} not found in {args.data}")
    rec = by_id[args.video]
    raw = feats[rec.video_id]
    if raw is None:
        raise ValidationError(f"no feature file for video {args.video!r}")
    example = prepare_example(rec, raw, cfg, args.variant, args.sigma_floor)
    from .model import forward
    batch = {s: example.features[s][None] for s in cfg.scales}
    density, _ = forward(params, cfg, batch)
    csv_path, pgm_path = emit_plot(density[0], example.target, args.out)
    print(f"pred count {count_from_density(density[0]):.3f}  "
          f"gt count {rec.count}")
    print(f"wrote {csv_path} and {pgm_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="racnet",
        description="Multi-scale temporal correlation pipeline for counting "
                    "repetitive actions from per-frame features.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics from an annotation CSV")
    p.add_argument("annotations")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("split", help="write train/val/test id lists")
    p.add_argument("annotations")
    p.add_argument("--mode", choices=("regular", "open-set"), default="regular")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", default="0.7,0.15,0.15")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="JSON file of set parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("make-targets", help="write density-map target CSVs")
    p.add_argument("annotations")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--variant", choices=TARGET_VARIANTS, default="mid")
    p.add_argument("--sigma-floor", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_make_targets)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--config", help="training config JSON (defaults: 8-frame run)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--preset", choices=("tiny", "small", "full"), default="tiny")
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("train", help="train on a data directory")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.racw)")
    p.add_argument("--preset", choices=("tiny", "small", "full"), default="small")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a data directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--round", action="store_true",
                   help="round predictions before metrics")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("plot", help="emit density map CSV + PGM for one video")
    p.add_argument("--model", required=True)
    p.add_argument("--video", required=True)
    p.add_argument("--data", required=True,
                   help="directory with annotations.csv and .racf files")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--variant", choices=TARGET_VARIANTS, default="mid")
    p.add_argument("--sigma-floor", type=float, default=0.1)
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValidationError, OSError) as exc:
        # bad paths and unreadable files are input errors, same as bad values
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
