"""Annotation CSV I/O, epoch quantization and posterior-track files."""

import csv
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from seizure.errors import DataError
from seizure.models import AnnotationEvent, AnnotationSet, Label
from seizure.signal.tracks import EPOCH_DURATION_S, EpochLabelTrack, PosteriorTrack

logger = logging.getLogger(__name__)

ANNOTATION_HEADER = ("start_s", "stop_s", "label")
POSTERIOR_HEADER = ("epoch", "posterior")
# Coverage of exactly half an epoch counts as seizure.
_TIE_TOLERANCE = 1e-9


def annotations_to_epoch_labels(ann: AnnotationSet) -> EpochLabelTrack:
    """Label an epoch seiz when seizure coverage of that epoch is at least half its duration."""
    n_epochs = int(math.floor(ann.record_duration_s / EPOCH_DURATION_S + _TIE_TOLERANCE))
    coverage = np.zeros(n_epochs, dtype=np.float64)
    starts = np.arange(n_epochs) * EPOCH_DURATION_S
    stops = starts + EPOCH_DURATION_S
    for event in ann.seizure_events():
        overlap = np.minimum(stops, event.stop_s) - np.maximum(starts, event.start_s)
        coverage += np.clip(overlap, 0.0, None)
    return EpochLabelTrack(coverage >= 0.5 * EPOCH_DURATION_S - _TIE_TOLERANCE)


def save_annotations(ann: AnnotationSet, path: str | Path) -> None:
    """Write `start_s,stop_s,label` rows with six fractional digits."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ANNOTATION_HEADER)
            for event in ann.events:
                writer.writerow([f"{event.start_s:.6f}", f"{event.stop_s:.6f}", event.label.value])
    except OSError as e:
        raise DataError(f"Cannot write annotations {path}: {e}") from e


def load_annotations(path: str | Path, record_duration_s: float | None = None) -> AnnotationSet:
    """Read an annotation CSV.

    Without an explicit duration the last event's stop time is used; files written
    for synthetic records cover the whole record with seiz/bckg events.
    """
    path = Path(path)
    try:
        lines = [line for line in path.read_text().splitlines() if line.strip()]
    except OSError as e:
        raise DataError(f"Cannot read annotations {path}: {e}") from e

    duration = record_duration_s
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != ANNOTATION_HEADER:
        raise DataError(f"{path}: expected header {','.join(ANNOTATION_HEADER)}, got {header}")

    try:
        events = tuple(
            AnnotationEvent(start_s=float(row[0]), stop_s=float(row[1]), label=Label(row[2].strip()))
            for row in reader
        )
        if duration is None:
            duration = max((e.stop_s for e in events), default=0.0)
        return AnnotationSet(events=events, record_duration_s=duration)
    except (IndexError, ValueError, ValidationError) as e:
        raise DataError(f"{path}: invalid annotation row: {e}") from e


def save_posteriors(track: PosteriorTrack, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(POSTERIOR_HEADER)
        for i, value in enumerate(track.values):
            writer.writerow([i, repr(float(value))])


def load_posteriors(path: str | Path) -> PosteriorTrack:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != POSTERIOR_HEADER:
                raise DataError(f"{path}: expected header {','.join(POSTERIOR_HEADER)}")
            values = [float(row[1]) for row in reader if row]
    except OSError as e:
        raise DataError(f"Cannot read posteriors {path}: {e}") from e
    return PosteriorTrack(np.asarray(values, dtype=np.float64))
