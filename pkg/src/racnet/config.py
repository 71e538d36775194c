"""Model and training configuration.

ModelConfig fixes every tensor dimension of the pipeline; TrainConfig holds
the run-level knobs and is what the JSON config files map onto (keys must
match the field names exactly, unknown keys are rejected).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ValidationError

VALID_SCALES = (1, 4, 8)
CORR_MODES = ("attention", "tsm")
TARGET_VARIANTS = ("begin", "mid", "end", "merge")
OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions of the encoder / correlation / predictor stack.

    ``scales`` selects which sliding-window scales feed the fused
    correlation tensor; ``corr_mode`` picks learned attention or the
    distance-based similarity matrix (one channel per scale).
    """

    n_frames: int = 64
    s1: int = 2
    s2: int = 2
    d_f: int = 16
    d_e: int = 32
    heads: int = 4
    scales: tuple[int, ...] = (1, 4, 8)
    corr_mode: str = "attention"
    c_f: int = 8
    d_p: int = 64
    p_heads: int = 4
    d_ff: int = 64
    use_posenc: bool = True

    def __post_init__(self):
        if self.corr_mode not in CORR_MODES:
            raise ValidationError(f"unknown corr_mode {self.corr_mode!r}")
        if not self.scales:
            raise ValidationError("scales must be nonempty")
        if any(s not in VALID_SCALES for s in self.scales):
            raise ValidationError(f"scales must be a subset of {VALID_SCALES}")
        if len(set(self.scales)) != len(self.scales):
            raise ValidationError("scales must not repeat")
        if self.d_e % self.heads != 0:
            raise ValidationError("d_e must be divisible by heads")
        if self.d_p % self.p_heads != 0:
            raise ValidationError("d_p must be divisible by p_heads")
        for name in ("n_frames", "s1", "s2", "d_f", "d_e", "heads", "c_f", "d_p", "p_heads", "d_ff"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")

    @property
    def d_h(self) -> int:
        return self.d_e // self.heads

    @property
    def c_in(self) -> int:
        """Channel count of the fused correlation tensor."""
        if self.corr_mode == "attention":
            return len(self.scales) * self.heads
        return len(self.scales)

    def replace(self, **kwargs) -> "ModelConfig":
        return dataclasses.replace(self, **kwargs)


def small_model(**overrides) -> ModelConfig:
    """Laptop-scale dimensions; the default for training experiments."""
    return ModelConfig(**overrides)


def full_model(**overrides) -> ModelConfig:
    """Production-scale dimensions (7x7 grids, 768-d features, 512-d embeddings)."""
    base = dict(s1=7, s2=7, d_f=768, d_e=512, heads=4, c_f=32, d_p=512, p_heads=4, d_ff=512)
    base.update(overrides)
    return ModelConfig(**base)


def tiny_model(**overrides) -> ModelConfig:
    """Minimal dimensions for gradient checking (8 frames, 16-d embeddings)."""
    base = dict(
        n_frames=8, s1=2, s2=2, d_f=8, d_e=16, heads=4, c_f=4, d_p=32, p_heads=4, d_ff=32
    )
    base.update(overrides)
    return ModelConfig(**base)


MODEL_PRESETS = {"small": small_model, "full": full_model, "tiny": tiny_model}


@dataclass(frozen=True)
class TrainConfig:
    """Run-level training knobs; defaults mirror the production recipe."""

    n_frames: int = 64
    learning_rate: float = 8e-6
    batch_size: int = 16
    steps: int = 16000
    optimizer: str = "adam"
    seed: int = 0
    variant: str = "mid"
    correlation_mode: str = "attention"
    scales: tuple[int, ...] = (1, 4, 8)
    sigma_floor: float = 0.1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"optimizer must be one of {OPTIMIZERS}")
        if self.variant not in TARGET_VARIANTS:
            raise ValidationError(f"variant must be one of {TARGET_VARIANTS}")
        if self.correlation_mode not in CORR_MODES:
            raise ValidationError(f"correlation_mode must be one of {CORR_MODES}")
        if not self.scales or any(s not in VALID_SCALES for s in self.scales):
            raise ValidationError(f"scales must be a nonempty subset of {VALID_SCALES}")
        if self.sigma_floor <= 0:
            raise ValidationError("sigma_floor must be > 0")
        if self.n_frames < 1:
            raise ValidationError("n_frames must be >= 1")


_TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def train_config_from_dict(data: dict) -> TrainConfig:
    """Build a TrainConfig from parsed JSON; unknown keys are an error."""
    if not isinstance(data, dict):
        raise ValidationError("training config must be a JSON object")
    unknown = set(data) - _TRAIN_FIELDS
    if unknown:
        raise ValidationError(f"unknown training config keys: {sorted(unknown)}")
    if "scales" in data:
        data = dict(data)
        data["scales"] = tuple(data["scales"])
    try:
        return TrainConfig(**data)
    except TypeError as exc:
        raise ValidationError(f"bad training config: {exc}") from exc


def load_train_config(path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return train_config_from_dict(data)


def model_config_for(train_cfg: TrainConfig, preset: str = "small", **dims) -> ModelConfig:
    """Model dimensions from a named preset, overlaid with the run's
    frame count, correlation mode and scale selection."""
    if preset not in MODEL_PRESETS:
        raise ValidationError(f"unknown model preset {preset!r}")
    return MODEL_PRESETS[preset](
        n_frames=train_cfg.n_frames,
        corr_mode=train_cfg.correlation_mode,
        scales=tuple(train_cfg.scales),
        **dims,
    )
