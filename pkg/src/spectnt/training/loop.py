import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from spectnt.autograd.tensor import GradTape, Tensor
from spectnt.errors import ConfigError, NonFiniteError, TrainingDivergedError
from spectnt.features.spectrogram import crop_to_pooling
from spectnt.io.checkpoint import save_checkpoint
from spectnt.metrics.chord import frames_to_segments, wcsr
from spectnt.metrics.melody import melody_metrics
from spectnt.metrics.report import MetricReport
from spectnt.metrics.tagging import tagging_metrics
from spectnt.model.spectnt import SpecTNT
from spectnt.reporting.history import HistoryBuffer, make_csv_sink
from spectnt.synth.tasks import SynthSample, class_to_hz
from spectnt.training.losses import bce_loss, ce_loss_framewise
from spectnt.training.optim import AdamW

logger = logging.getLogger(__name__)

PRIMARY_METRIC = {"tagging": "roc_auc", "melody": "rpa", "chord": "wcsr"}
METRIC_COLUMNS = {
    "tagging": ("roc_auc", "pr_auc"),
    "melody": ("oa", "rpa", "vr"),
    "chord": ("wcsr", "frame_accuracy"),
}


@dataclass
class TrainConfig:
    lr: float = 5e-4
    weight_decay: float = 5e-3
    batch_size: int = 16
    steps: int = 1000
    seed: int = 0
    eval_every: int = 0
    stop_below: float | None = None
    out_dir: Path | None = None
    midi_base: int = 36

    def __post_init__(self) -> None:
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)
        self.validate()

    def validate(self) -> None:
        if self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError(f"lr must be > 0 and weight_decay >= 0, got {self.lr}, {self.weight_decay}")
        if self.batch_size < 1 or self.steps < 0 or self.eval_every < 0:
            raise ConfigError("batch_size must be >= 1; steps and eval_every >= 0")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["out_dir"] = str(self.out_dir) if self.out_dir else None
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown training config keys: {', '.join(unknown)}")
        return cls(**data)


def downsample_labels(labels: np.ndarray, p_t: int) -> np.ndarray:
    """Majority label within each window of ``p_t`` frames; ties go to the lower class."""
    labels = np.asarray(labels)
    if p_t == 1:
        return labels
    windows = labels[: len(labels) - len(labels) % p_t].reshape(-1, p_t)
    return np.array([np.bincount(w).argmax() for w in windows], dtype=labels.dtype)


def make_batch(model: SpecTNT, samples: Sequence[SynthSample]) -> tuple[Tensor, np.ndarray]:
    """Stack cropped features [B, T, F, K] and the matching targets for ``model``."""
    cfg = model.config
    feats = [crop_to_pooling(s.features, cfg.p_f, cfg.p_t) for s in samples]
    x = Tensor(np.stack(feats).astype(model.fpe.dtype))
    if not cfg.framewise:
        return x, np.stack([s.labels for s in samples])
    frames = feats[0].shape[0]
    y = np.stack([downsample_labels(s.labels[:frames], cfg.p_t) for s in samples])
    return x, y


def task_loss(model: SpecTNT, out: Tensor, targets: np.ndarray) -> Tensor:
    if model.config.framewise:
        return ce_loss_framewise(out, targets)
    return bce_loss(out, targets)


def predict(model: SpecTNT, samples: Sequence[SynthSample], batch_size: int = 16) -> np.ndarray:
    """Eval-mode outputs stacked over ``samples``."""
    outs = []
    for i in range(0, len(samples), batch_size):
        x, _ = make_batch(model, samples[i : i + batch_size])
        outs.append(model(x, train=False).data)
    return np.concatenate(outs)


def evaluate(
    model: SpecTNT,
    samples: Sequence[SynthSample],
    task: str | None = None,
    batch_size: int = 16,
    midi_base: int = 36,
) -> MetricReport:
    """Task metrics of ``model`` over ``samples`` (eval mode, no dropout)."""
    task = task or model.config.task
    if not samples:
        raise ConfigError("cannot evaluate on an empty sample list")
    outputs = predict(model, samples, batch_size)
    _, targets = make_batch(model, samples)
    if task == "tagging":
        return tagging_metrics(outputs, targets)

    pred = outputs.argmax(axis=-1)
    if task == "melody":
        return melody_metrics(class_to_hz(pred, midi_base).ravel(), class_to_hz(targets, midi_base).ravel())
    if task == "chord":
        frames = targets.shape[1]
        scores = [wcsr(frames_to_segments(p), frames_to_segments(t)) for p, t in zip(pred, targets)]
        return MetricReport(
            {"wcsr": float(np.mean(scores)) / 100.0, "frame_accuracy": float((pred == targets).mean())},
            {"clips": len(samples), "frames": int(frames * len(samples))},
        )
    raise ConfigError(f"unknown task {task!r}")


def train_loop(
    cfg: TrainConfig,
    model: SpecTNT,
    train: Sequence[SynthSample],
    val: Sequence[SynthSample] | None = None,
    steps: int | None = None,
) -> list[dict[str, float | int]]:
    """Train ``model`` in place with AdamW; returns one history row per step.

    Shuffling and dropout masks come from ``cfg.seed``. Evaluation rows carry the
    validation metrics; the best one is checkpointed as ``best.stnc`` under ``cfg.out_dir``.
    """
    steps = cfg.steps if steps is None else steps
    if steps and not train:
        raise ConfigError("training set is empty")
    task = model.config.task
    shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    optimizer = AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    columns = ("step", "loss", *METRIC_COLUMNS[task])
    sink = make_csv_sink(cfg.out_dir / "history.csv", columns) if cfg.out_dir else None
    history = HistoryBuffer(sink)
    primary = PRIMARY_METRIC[task]
    best = -np.inf

    order = np.empty(0, dtype=np.int64)
    cursor = 0
    last_good: dict[str, np.ndarray] | None = None
    try:
        for step in range(1, steps + 1):
            if cursor + cfg.batch_size > len(order):
                order = shuffle_rng.permutation(len(train))
                cursor = 0
            batch = [train[i] for i in order[cursor : cursor + cfg.batch_size]]
            cursor += cfg.batch_size

            x, y = make_batch(model, batch)
            optimizer.zero_grad()
            with GradTape() as tape:
                loss = task_loss(model, model(x, train=True, rng=dropout_rng), y)
            value = loss.item()
            if not np.isfinite(value):
                if last_good is not None:
                    model.load_state_dict(last_good)
                raise NonFiniteError(f"loss became {value} at step {step}", "loss")
            # last parameters with a finite loss; adamw_step never moves them on a bad gradient
            last_good = model.state_dict()
            tape.backward(loss)
            optimizer.step()

            row: dict[str, float | int] = {"step": step, "loss": value}
            last = step == steps
            if val and cfg.eval_every and (step % cfg.eval_every == 0 or last):
                report = evaluate(model, val, task, cfg.batch_size, cfg.midi_base)
                row.update(report.values)
                logger.info(
                    "step %d loss %.4f %s", step, value,
                    " ".join(f"{k} {v:.4f}" for k, v in report.values.items()),
                )
                if report.values[primary] > best:
                    best = report.values[primary]
                    if cfg.out_dir:
                        save_checkpoint(cfg.out_dir / "best.stnc", model, {"step": step, primary: best})
            history.add(row)
            if cfg.stop_below is not None and value < cfg.stop_below:
                logger.info("loss %.4g below %.4g at step %d, stopping", value, cfg.stop_below, step)
                break
    except NonFiniteError as exc:
        logger.error("training diverged: %s", exc)
        raise TrainingDivergedError(f"training diverged: {exc}; last good state restored") from exc
    finally:
        history.flush()

    if cfg.out_dir and steps:
        save_checkpoint(cfg.out_dir / "last.stnc", model, {"step": len(history.rows)})
    return history.rows
