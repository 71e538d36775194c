"""Count repetitions in videos from per-frame features.

Pipeline: multi-scale sliding-window clips over N sampled frames, a pluggable
per-clip feature provider, a 3D-conv temporal-context encoder, multi-head
attention correlation across frames, and a transformer density-map predictor
whose linear sum is the count. Training uses exact analytic gradients
verified against finite differences.
"""

from .config import ModelConfig, TrainConfig, full_model, small_model, tiny_model
from .dataio import (CycleSpan, DatasetStats, Split, SynthSetSpec, SynthSpec,
                     VideoRecord, dataset_stats, generate_synthetic,
                     generate_synthetic_set, parse_annotations,
                     serialize_annotations, split_dataset)
from .errors import NumericError, ParseError, RacnetError, ValidationError
from .evaluate import EvalResult, EvalRow, emit_plot, evaluate, predict_count
from .metrics import mae, obo
from .model import backward, forward, init_params, load_model, save_model
from .predictor import count_from_density, predict_density
from .sampling import build_clipset, map_cycles_to_samples, sample_frames
from .targets import gaussian_bin_mass, make_density_target, mse_loss
from .training import (Example, GradReport, forward_backward, grad_check,
                       prepare_example, train)

__version__ = "0.1.0"

__all__ = [
    "ModelConfig", "TrainConfig", "full_model", "small_model", "tiny_model",
    "CycleSpan", "DatasetStats", "Split", "SynthSetSpec", "SynthSpec",
    "VideoRecord", "dataset_stats", "generate_synthetic",
    "generate_synthetic_set", "parse_annotations", "serialize_annotations",
    "split_dataset", "NumericError", "ParseError", "RacnetError",
    "ValidationError", "EvalResult", "EvalRow", "emit_plot", "evaluate",
    "predict_count", "mae", "obo", "backward", "forward", "init_params",
    "load_model", "save_model", "count_from_density", "predict_density",
    "build_clipset", "map_cycles_to_samples", "sample_frames",
    "gaussian_bin_mass", "make_density_target", "mse_loss", "Example",
    "GradReport", "forward_backward", "grad_check", "prepare_example", "train",
]
