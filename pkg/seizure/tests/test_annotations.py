import tempfile
import unittest
from pathlib import Path

import numpy as np

from seizure.errors import DataError
from seizure.models import AnnotationEvent, AnnotationSet, Label
from seizure.signal.annotations import (
    annotations_to_epoch_labels,
    load_annotations,
    load_posteriors,
    save_annotations,
    save_posteriors,
)
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack


def _seiz(start: float, stop: float) -> AnnotationEvent:
    return AnnotationEvent(start_s=start, stop_s=stop, label=Label.SEIZ)


class EpochLabelTests(unittest.TestCase):
    def test_quantizes_seizure_interval_to_epochs(self) -> None:
        ann = AnnotationSet(events=(_seiz(2.0, 5.0),), record_duration_s=6.0)
        track = annotations_to_epoch_labels(ann)
        self.assertEqual([label.value for label in track.labels], ["bckg", "bckg", "seiz", "seiz", "seiz", "bckg"])

    def test_short_straddling_event_stays_background(self) -> None:
        ann = AnnotationSet(events=(_seiz(2.6, 3.4),), record_duration_s=6.0)
        self.assertFalse(annotations_to_epoch_labels(ann).is_seizure.any())

    def test_half_epoch_coverage_counts_as_seizure(self) -> None:
        ann = AnnotationSet(events=(_seiz(2.5, 3.0),), record_duration_s=4.0)
        np.testing.assert_array_equal(annotations_to_epoch_labels(ann).is_seizure, [False, False, True, False])

    def test_no_events_gives_all_background(self) -> None:
        track = annotations_to_epoch_labels(AnnotationSet(record_duration_s=5.0))
        self.assertEqual(len(track), 5)
        self.assertFalse(track.is_seizure.any())

    def test_partial_trailing_epoch_is_dropped(self) -> None:
        track = annotations_to_epoch_labels(AnnotationSet(record_duration_s=5.7))
        self.assertEqual(len(track), 5)

    def test_overlapping_events_are_rejected(self) -> None:
        with self.assertRaises(ValueError):
            AnnotationSet(events=(_seiz(1.0, 3.0), _seiz(2.0, 4.0)), record_duration_s=5.0)

    def test_from_labels_matches_labels(self) -> None:
        track = EpochLabelTrack.from_labels(["seiz", "bckg", Label.SEIZ])
        np.testing.assert_array_equal(track.is_seizure, [True, False, True])
        self.assertEqual(track.duration_s, 3.0)


class AnnotationFileTests(unittest.TestCase):
    def test_csv_round_trip(self) -> None:
        ann = AnnotationSet(
            events=(
                AnnotationEvent(start_s=0.0, stop_s=2.0, label=Label.BCKG),
                _seiz(2.0, 5.5),
                AnnotationEvent(start_s=5.5, stop_s=8.0, label=Label.BCKG),
            ),
            record_duration_s=8.0,
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.csv"
            save_annotations(ann, path)
            self.assertEqual(path.read_text().splitlines()[0], "start_s,stop_s,label")
            loaded = load_annotations(path)
        self.assertEqual(loaded, ann)

    def test_explicit_duration_overrides_last_stop(self) -> None:
        ann = AnnotationSet(events=(_seiz(1.0, 2.0),), record_duration_s=10.0)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.csv"
            save_annotations(ann, path)
            self.assertEqual(load_annotations(path).record_duration_s, 2.0)
            self.assertEqual(load_annotations(path, 10.0).record_duration_s, 10.0)

    def test_bad_header_is_a_data_error(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.csv"
            path.write_text("begin,end,kind\n0,1,seiz\n")
            with self.assertRaises(DataError):
                load_annotations(path)

    def test_unknown_label_is_a_data_error(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.csv"
            path.write_text("start_s,stop_s,label\n0,1,spsw\n")
            with self.assertRaises(DataError):
                load_annotations(path)

    def test_posterior_round_trip_is_exact(self) -> None:
        track = PosteriorTrack(np.array([0.0, 0.125, 1.0 / 3.0, 1.0]))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.posteriors.csv"
            save_posteriors(track, path)
            self.assertEqual(load_posteriors(path), track)

    def test_posteriors_outside_unit_interval_are_rejected(self) -> None:
        with self.assertRaises(DataError):
            PosteriorTrack(np.array([0.2, 1.5]))
        with self.assertRaises(DataError):
            PosteriorTrack(np.array([np.nan]))


if __name__ == "__main__":
    unittest.main()
