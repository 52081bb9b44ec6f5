import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.tensor import Tensor
from spectnt.errors import ContractError, DimensionError

PROB_EPS = 1e-7
IGNORE_INDEX = -1


def bce_loss(probs: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy over every element; probabilities are clamped to [1e-7, 1-1e-7]."""
    targets = np.asarray(targets, dtype=probs.dtype)
    if targets.shape != probs.shape:
        raise DimensionError(f"bce: probs {probs.shape} and targets {targets.shape} differ")
    p = F.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    t = Tensor(targets)
    ll = t * F.log(p) + (1.0 - t) * F.log(1.0 - p)
    return -F.mean(ll)


def ce_loss_framewise(probs: Tensor, labels, ignore_index: int = IGNORE_INDEX) -> Tensor:
    """Mean −ln p[t, label_t] over frames whose label is not ``ignore_index``."""
    labels = np.asarray(labels)
    classes = probs.shape[-1]
    if labels.shape != probs.shape[:-1]:
        raise DimensionError(f"ce: probs {probs.shape} do not match labels {labels.shape}")
    flat_labels = labels.reshape(-1)
    keep = np.flatnonzero(flat_labels != ignore_index)
    if keep.size == 0:
        raise ContractError("every frame is ignored; the frame-wise loss is undefined")
    picked = flat_labels[keep]
    if picked.min() < 0 or picked.max() >= classes:
        raise ContractError(f"frame label outside 0..{classes - 1}: {picked.min()}..{picked.max()}")
    flat = F.reshape(probs, (-1, classes))
    p = F.clamp(F.getitem(flat, (keep, picked)), PROB_EPS, 1.0)
    return -F.mean(F.log(p))
