"""Epoch-level overlap scoring and the sensitivity / specificity / false-alarm metrics."""

from __future__ import annotations

import numpy as np
from sklearn.metrics import confusion_matrix

from seizure.errors import AlignmentError, DataError
from seizure.models import ConfusionCounts, FaMode, Metrics
from seizure.signal.tracks import EpochLabelTrack

SECONDS_PER_DAY = 86400.0


def count_runs(mask: np.ndarray) -> int:
    """Number of maximal runs of True."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return 0
    return int(mask[0]) + int(np.count_nonzero(mask[1:] & ~mask[:-1]))


def score_epochs(ref: EpochLabelTrack, hyp: EpochLabelTrack) -> ConfusionCounts:
    if len(ref) != len(hyp):
        raise AlignmentError(f"reference has {len(ref)} epochs, hypothesis has {len(hyp)}")
    if len(ref) == 0:
        return ConfusionCounts(tp=0, tn=0, fp=0, fn=0, total_duration_s=0.0)
    # Rows are reference, columns hypothesis; label order (bckg, seiz).
    (tn, fp), (fn, tp) = confusion_matrix(ref.is_seizure, hyp.is_seizure, labels=[False, True])
    return ConfusionCounts(
        tp=int(tp),
        tn=int(tn),
        fp=int(fp),
        fn=int(fn),
        false_alarm_events=count_runs(hyp.is_seizure & ~ref.is_seizure),
        total_duration_s=ref.duration_s,
    )


def metrics(counts: ConfusionCounts, fa_mode: FaMode | str = FaMode.EVENT) -> Metrics:
    """Sensitivity and specificity (0 for an empty class) and false alarms per 24 hours.

    In event mode a false alarm is a maximal run of false-positive epochs; in
    epoch mode every false-positive epoch counts.
    """
    if counts.total_duration_s <= 0:
        raise DataError("cannot normalize false alarms over a zero-length recording")
    positives = counts.tp + counts.fn
    negatives = counts.tn + counts.fp
    alarms = counts.false_alarm_events if FaMode(fa_mode) is FaMode.EVENT else counts.fp
    return Metrics(
        sensitivity=counts.tp / positives if positives else 0.0,
        specificity=counts.tn / negatives if negatives else 0.0,
        fa_per_24h=alarms * SECONDS_PER_DAY / counts.total_duration_s,
    )
