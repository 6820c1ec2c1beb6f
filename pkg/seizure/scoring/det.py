"""Threshold sweeps into DET curves and operating-point lookup."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from seizure.config import settings
from seizure.errors import AlignmentError, ConfigError, DataError
from seizure.models import ConfusionCounts, DetCurve, DetPoint, FaMode, SmoothingParams
from seizure.scoring.epochs import metrics, score_epochs
from seizure.scoring.smoothing import smooth_hypotheses
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack

logger = logging.getLogger(__name__)


def default_thresholds(count: int | None = None) -> list[float]:
    return np.linspace(0.0, 1.0, count or settings.threshold_count).tolist()


def _check_thresholds(thresholds: Sequence[float]) -> list[float]:
    values = [float(t) for t in thresholds]
    if not values:
        raise ConfigError("DET sweep needs at least one threshold")
    if any(t < 0.0 or t > 1.0 for t in values):
        raise ConfigError("thresholds must lie in [0, 1]")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("thresholds must be strictly increasing")
    return values


def det_curve_many(
    pairs: Sequence[tuple[PosteriorTrack, EpochLabelTrack]],
    smoothing: SmoothingParams | None = None,
    thresholds: Sequence[float] | None = None,
    fa_mode: FaMode | str = FaMode.EVENT,
) -> DetCurve:
    """One DET point per threshold, with counts pooled over every (posteriors, reference) pair."""
    if not pairs:
        raise DataError("DET sweep needs at least one scored record")
    smoothing = smoothing or SmoothingParams()
    values = _check_thresholds(thresholds if thresholds is not None else default_thresholds())
    for i, (post, ref) in enumerate(pairs):
        if len(post) != len(ref):
            raise AlignmentError(f"record {i}: {len(post)} posteriors for {len(ref)} reference epochs")

    points = []
    for t in values:
        params = smoothing.model_copy(update={"threshold": t})
        total = ConfusionCounts(tp=0, tn=0, fp=0, fn=0, total_duration_s=0.0)
        for post, ref in pairs:
            hyp, _ = smooth_hypotheses(post, params)
            total = total + score_epochs(ref, hyp)
        m = metrics(total, fa_mode)
        points.append(
            DetPoint(
                threshold=t,
                sensitivity=m.sensitivity,
                specificity=m.specificity,
                fa_per_24h=m.fa_per_24h,
                false_positive_rate=1.0 - m.specificity,
                miss_rate=1.0 - m.sensitivity,
            )
        )
    logger.debug("DET sweep over %d thresholds and %d records", len(values), len(pairs))
    return DetCurve(points=points)


def det_curve(
    posteriors: PosteriorTrack,
    ref: EpochLabelTrack,
    smoothing: SmoothingParams | None = None,
    thresholds: Sequence[float] | None = None,
    fa_mode: FaMode | str = FaMode.EVENT,
) -> DetCurve:
    return det_curve_many([(posteriors, ref)], smoothing, thresholds, fa_mode)


def operating_point(curve: DetCurve, target_sensitivity: float) -> DetPoint:
    """Point whose sensitivity is nearest the target; ties go to the fewer false alarms."""
    if not curve.points:
        raise DataError("empty DET curve")
    return min(curve.points, key=lambda p: (abs(p.sensitivity - target_sensitivity), p.fa_per_24h))
