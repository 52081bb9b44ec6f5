"""JSON run configuration: model settings, optimisation knobs and data locations."""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from spectnt.errors import ConfigError
from spectnt.model.config import PRESETS, ModelConfig
from spectnt.training.loop import TrainConfig

LEARNING_RATES = {"tagging": 5e-4, "melody": 1e-3, "chord": 5e-4}

# Geometry matching the default synthetic datasets, small enough to train on a laptop CPU.
DESK_PRESETS: dict[str, dict[str, Any]] = {
    "tagging-desk": dict(task="tagging", frames=32, bins=64, p_f=1, p_t=4, k=32, d=32,
                         h_k=4, h_d=4, classes=10, L=2, dropout=0.1),
    "melody-desk": dict(task="melody", frames=64, bins=96, p_f=2, p_t=1, k=32, d=64,
                        h_k=4, h_d=8, classes=61, L=2, dropout=0.1),
    "chord-desk": dict(task="chord", frames=64, bins=24, p_f=1, p_t=1, k=16, d=64,
                       h_k=4, h_d=8, classes=25, L=2, dropout=0.1),
}

_MODEL_KEYS = {"variant", "p_f", "p_t", "k", "d", "h_k", "h_d", "L", "dropout", "frames", "bins",
               "channels", "conv_depth", "ffn_ratio", "downsample", "head_activation"}
_TRAIN_KEYS = {"lr", "weight_decay", "batch_size", "steps", "seed", "eval_every", "stop_below"}


@dataclass
class RunConfig:
    task: str = "tagging"
    variant: str = "full"
    p_f: int = 1
    p_t: int = 4
    k: int = 96
    d: int = 96
    h_k: int = 4
    h_d: int = 8
    o_d: Any = 50
    L: int = 3
    dropout: float = 0.15
    frames: int = 196
    bins: int = 128
    channels: int = 1
    conv_depth: int = 1
    ffn_ratio: int = 4
    downsample: str = "avgpool"
    head_activation: str = ""
    lr: float = 5e-4
    weight_decay: float = 5e-3
    batch_size: int = 16
    steps: int = 1000
    seed: int = 0
    eval_every: int = 100
    stop_below: float | None = None
    data: str | None = None
    out: str | None = None

    @property
    def classes(self) -> int:
        """``o_d`` is a class count, or ["T", count] for frame-wise heads."""
        if isinstance(self.o_d, (list, tuple)):
            if len(self.o_d) != 2:
                raise ConfigError(f"o_d must be a count or [\"T\", count], got {self.o_d!r}")
            return int(self.o_d[1])
        return int(self.o_d)

    def model_config(self) -> ModelConfig:
        settings = {key: getattr(self, key) for key in _MODEL_KEYS}
        return ModelConfig(task=self.task, classes=self.classes, **settings)

    def train_config(self) -> TrainConfig:
        settings = {key: getattr(self, key) for key in _TRAIN_KEYS}
        return TrainConfig(out_dir=Path(self.out) if self.out else None, **settings)

    def validate(self) -> "RunConfig":
        self.model_config()
        self.train_config()
        return self

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _known_keys() -> set[str]:
    return {f.name for f in fields(RunConfig)}


def preset_values(name: str) -> dict[str, Any]:
    """Per-task presets (``tagging``, ``melody``, ``chord``) or their ``-desk`` counterparts."""
    table = {**PRESETS, **DESK_PRESETS}
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(table)}")
    values = dict(table[name])
    values["o_d"] = values.pop("classes")
    if values["task"] != "tagging":
        values["o_d"] = ["T", values["o_d"]]
    values["lr"] = LEARNING_RATES[values["task"]]
    return values


def build_run_config(
    doc: dict[str, Any] | None = None, preset: str | None = None, **overrides: Any
) -> RunConfig:
    """Preset defaults, then the JSON document, then explicit overrides (``None`` means unset)."""
    doc = dict(doc or {})
    unknown = sorted(set(doc) - _known_keys())
    if unknown:
        raise ConfigError(f"unknown run config keys: {', '.join(unknown)}")
    name = preset or doc.get("task") or overrides.get("task") or "tagging"
    values = preset_values(name)
    values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc


def load_run_config(
    path: str | Path | None = None, preset: str | None = None, **overrides: Any
) -> RunConfig:
    doc: dict[str, Any] = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"run config {path} must be a JSON object")
    return build_run_config(doc, preset, **overrides)
