import unittest

import numpy as np

from seizure.architectures.windows import (
    AffineScaler,
    WindowSource,
    balanced_epoch_sample,
    centered_window,
    one_hot_targets,
    record_batches,
    window_indices,
)
from seizure.errors import DataError
from seizure.signal.tracks import EpochLabelTrack


class WindowTests(unittest.TestCase):
    def test_edges_replicate_nearest_epoch(self) -> None:
        idx = window_indices(6, np.array([0, 3, 5]), 5)
        np.testing.assert_array_equal(idx[0], [0, 0, 0, 1, 2])
        np.testing.assert_array_equal(idx[1], [1, 2, 3, 4, 5])
        np.testing.assert_array_equal(idx[2], [3, 4, 5, 5, 5])

    def test_frame_level_windows(self) -> None:
        frames = np.arange(30)
        window = centered_window(frames, 1, 3, units_per_epoch=10)
        np.testing.assert_array_equal(window, np.arange(30))
        window = centered_window(frames, 0, 3, units_per_epoch=10)
        np.testing.assert_array_equal(window[:10], np.zeros(10))
        np.testing.assert_array_equal(window[10:], np.arange(20))

    def test_record_batches_cover_every_epoch(self) -> None:
        units = np.arange(7, dtype=np.float64)[:, None]
        batches = list(record_batches(units, 7, 3, batch_size=3))
        self.assertEqual([b.shape for b in batches], [(3, 3, 1), (3, 3, 1), (1, 3, 1)])
        np.testing.assert_array_equal(batches[-1][0, :, 0], [5, 6, 6])

    def test_source_builds_windows_lazily(self) -> None:
        units = [np.arange(5, dtype=np.float64)[:, None], 10 + np.arange(4, dtype=np.float64)[:, None]]
        index = np.array([[0, 0], [1, 3]])
        source = WindowSource(units, index, one_hot_targets([True, False]), 3, finish=lambda b: b * 2)
        x, y = source.take(np.array([1, 0]))
        np.testing.assert_array_equal(x[0, :, 0], [24, 26, 26])
        np.testing.assert_array_equal(x[1, :, 0], [0, 0, 2])
        np.testing.assert_array_equal(y, [[0, 1], [1, 0]])


class BalancedSampleTests(unittest.TestCase):
    def _tracks(self) -> list[EpochLabelTrack]:
        labels = np.zeros(400, dtype=bool)
        labels[100:140] = True
        other = np.zeros(300, dtype=bool)
        other[10:30] = True
        return [EpochLabelTrack(is_seizure=labels), EpochLabelTrack(is_seizure=other)]

    def test_equal_ratio_gives_half_seizure(self) -> None:
        tracks = self._tracks()
        index = balanced_epoch_sample(tracks, 1.0, seed=0)
        seizure = np.array([tracks[r].is_seizure[e] for r, e in index])
        self.assertEqual(len(index), 120)
        self.assertAlmostEqual(seizure.mean(), 0.5)

    def test_sample_is_sorted_and_seeded(self) -> None:
        tracks = self._tracks()
        a = balanced_epoch_sample(tracks, 2.0, seed=5)
        b = balanced_epoch_sample(tracks, 2.0, seed=5)
        np.testing.assert_array_equal(a, b)
        self.assertEqual(len(a), 180)
        keys = a[:, 0] * 1000 + a[:, 1]
        self.assertTrue(np.all(np.diff(keys) > 0))

    def test_cap_on_examples(self) -> None:
        index = balanced_epoch_sample(self._tracks(), 1.0, seed=0, max_examples=40)
        self.assertEqual(len(index), 40)

    def test_single_class_corpus_is_rejected(self) -> None:
        with self.assertRaises(DataError):
            balanced_epoch_sample([EpochLabelTrack(is_seizure=np.zeros(20, dtype=bool))], 1.0, seed=0)


class ScalerTests(unittest.TestCase):
    def test_standard_scaler(self) -> None:
        data = np.random.default_rng(0).normal(3.0, 2.0, (500, 4))
        scaled = AffineScaler.standard(data)(data)
        np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.std(axis=0), 1.0)

    def test_minmax_scaler(self) -> None:
        data = np.random.default_rng(1).normal(0.0, 5.0, (200, 3))
        scaled = AffineScaler.minmax(data)(data)
        np.testing.assert_allclose(scaled.min(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.max(axis=0), 1.0)


if __name__ == "__main__":
    unittest.main()
