from collections.abc import Sequence

import numpy as np

from spectnt.errors import ContractError, UndefinedMetricError

Segment = tuple[float, float, int]


def frames_to_segments(labels: Sequence[int], frame_duration: float = 1.0) -> list[Segment]:
    """Merge runs of equal frame labels into time-sorted (start, end, label) segments."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    bounds = np.r_[0, np.flatnonzero(np.diff(labels)) + 1, labels.size]
    return [
        (float(a * frame_duration), float(b * frame_duration), int(labels[a]))
        for a, b in zip(bounds[:-1], bounds[1:])
    ]


def _validate(segments: Sequence[Segment], what: str) -> None:
    prev_end = -np.inf
    for start, end, _ in segments:
        if end < start:
            raise ContractError(f"{what} segment ({start}, {end}) ends before it starts")
        if start < prev_end:
            raise ContractError(f"{what} segments overlap or are unsorted at t={start}")
        prev_end = end


def wcsr(est_segments: Sequence[Segment], ref_segments: Sequence[Segment]) -> float:
    """Weighted chord symbol recall in percent: matching-label overlap over reference duration."""
    _validate(ref_segments, "reference")
    _validate(est_segments, "estimated")
    total = sum(end - start for start, end, _ in ref_segments)
    if total <= 0:
        raise UndefinedMetricError("reference segments have zero total duration")
    correct = 0.0
    j = 0
    for r_start, r_end, r_label in ref_segments:
        while j < len(est_segments) and est_segments[j][1] <= r_start:
            j += 1
        k = j
        while k < len(est_segments) and est_segments[k][0] < r_end:
            e_start, e_end, e_label = est_segments[k]
            if e_label == r_label:
                correct += max(0.0, min(r_end, e_end) - max(r_start, e_start))
            k += 1
    return 100.0 * correct / total
