"""Third-pass postprocessing: threshold, bridge short gaps, drop short events."""

from __future__ import annotations

import numpy as np

from seizure.models import AnnotationEvent, Label, SmoothingParams
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack


def runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """[start, stop) epoch index pairs of every maximal True run."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def binarize(posteriors: PosteriorTrack, threshold: float, prior_weight: float = 1.0) -> np.ndarray:
    """Epochs whose prior-weighted posterior reaches the threshold; threshold 1 selects nothing."""
    p = posteriors.values
    if prior_weight != 1.0:
        p = prior_weight * p / (prior_weight * p + (1.0 - p))
    if threshold >= 1.0:
        return np.zeros(p.shape[0], dtype=bool)
    return p >= threshold


def smooth_hypotheses(
    posteriors: PosteriorTrack, params: SmoothingParams
) -> tuple[EpochLabelTrack, list[AnnotationEvent]]:
    mask = binarize(posteriors, params.threshold, params.class_prior_weight)
    epoch = posteriors.epoch_duration_s

    spans = runs(mask)
    for (_, prev_stop), (next_start, _) in zip(spans, spans[1:]):
        if (next_start - prev_stop) * epoch < params.merge_gap_s:
            mask[prev_stop:next_start] = True

    events = []
    for start, stop in runs(mask):
        if (stop - start) * epoch < params.min_event_s:
            mask[start:stop] = False
        else:
            events.append(AnnotationEvent(start_s=start * epoch, stop_s=stop * epoch, label=Label.SEIZ))
    return EpochLabelTrack(mask, epoch), events
