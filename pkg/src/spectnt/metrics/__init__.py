from spectnt.metrics.chord import frames_to_segments, wcsr
from spectnt.metrics.melody import melody_metrics
from spectnt.metrics.report import MetricReport
from spectnt.metrics.tagging import pr_auc, roc_auc, tagging_metrics

__all__ = [
    "MetricReport",
    "frames_to_segments",
    "melody_metrics",
    "pr_auc",
    "roc_auc",
    "tagging_metrics",
    "wcsr",
]
