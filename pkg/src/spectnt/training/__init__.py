from spectnt.training.ablation import run_ablation
from spectnt.training.losses import IGNORE_INDEX, bce_loss, ce_loss_framewise
from spectnt.training.loop import (
    TrainConfig,
    downsample_labels,
    evaluate,
    make_batch,
    predict,
    train_loop,
)
from spectnt.training.optim import AdamW, AdamWState, adamw_step

__all__ = [
    "IGNORE_INDEX",
    "AdamW",
    "AdamWState",
    "TrainConfig",
    "adamw_step",
    "bce_loss",
    "ce_loss_framewise",
    "downsample_labels",
    "evaluate",
    "make_batch",
    "predict",
    "run_ablation",
    "train_loop",
]
