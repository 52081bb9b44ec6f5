import numpy as np

from spectnt.errors import DimensionError
from spectnt.metrics.report import MetricReport

CENT_TOLERANCE = 50.0


def melody_metrics(est_f0, ref_f0, tolerance: float = CENT_TOLERANCE) -> MetricReport:
    """OA, RPA and VR of frame-aligned F0 sequences in Hz; 0 marks an unvoiced frame.

    With no voiced reference frame RPA and VR are reported as 0 and flagged.
    """
    est = np.asarray(est_f0, dtype=np.float64).ravel()
    ref = np.asarray(ref_f0, dtype=np.float64).ravel()
    if est.shape != ref.shape:
        raise DimensionError(f"estimate has {est.size} frames, reference has {ref.size}")
    ref_voiced = ref > 0
    est_voiced = est > 0
    both = ref_voiced & est_voiced
    cents = np.full(ref.shape, np.inf)
    cents[both] = np.abs(1200.0 * np.log2(est[both] / ref[both]))
    pitch_ok = cents <= tolerance

    n_voiced = int(ref_voiced.sum())
    flags = []
    if n_voiced:
        rpa = float(pitch_ok[ref_voiced].mean())
        vr = float(est_voiced[ref_voiced].mean())
    else:
        rpa = vr = 0.0
        flags.append("no_voiced_reference")
    correct = np.where(ref_voiced, pitch_ok, ~est_voiced)
    oa = float(correct.mean()) if ref.size else 0.0
    return MetricReport(
        {"oa": oa, "rpa": rpa, "vr": vr},
        {"frames": int(ref.size), "voiced_frames": n_voiced},
        flags,
    )
