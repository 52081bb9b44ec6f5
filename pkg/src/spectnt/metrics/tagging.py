import logging

import numpy as np
from scipy.stats import rankdata

from spectnt.errors import DimensionError, UndefinedMetricError
from spectnt.metrics.report import MetricReport

logger = logging.getLogger(__name__)


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise DimensionError(f"scores {scores.shape} and labels {labels.shape} differ")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """P(random positive outranks random negative), ties counted ½."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC-AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def pr_auc(scores, labels) -> float:
    """Average precision: Σ (R_k − R_{k−1})·P_k over descending distinct-score thresholds."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("PR-AUC needs at least one positive label")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores, hits = scores[order], labels[order]
    tps = np.cumsum(hits)
    # last index of each run of equal scores
    cut = np.r_[np.flatnonzero(np.diff(sorted_scores)), sorted_scores.size - 1]
    tps = tps[cut]
    precision = tps / (cut + 1)
    recall = tps / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def tagging_metrics(scores: np.ndarray, labels: np.ndarray) -> MetricReport:
    """Macro ROC-AUC and PR-AUC over tags of [clips, tags] arrays; single-class tags are skipped."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 2:
        raise DimensionError(f"expected matching [clips, tags] arrays, got {scores.shape} and {labels.shape}")
    roc, pr, skipped = [], [], 0
    for tag in range(scores.shape[1]):
        try:
            roc.append(roc_auc(scores[:, tag], labels[:, tag]))
            pr.append(pr_auc(scores[:, tag], labels[:, tag]))
        except UndefinedMetricError:
            skipped += 1
    if not roc:
        raise UndefinedMetricError("no tag has both classes present")
    flags = [f"skipped_single_class_tags={skipped}"] if skipped else []
    if skipped:
        logger.debug("skipped %d single-class tags", skipped)
    return MetricReport(
        {"roc_auc": float(np.mean(roc)), "pr_auc": float(np.mean(pr))},
        {"clips": scores.shape[0], "tags": len(roc)},
        flags,
    )
