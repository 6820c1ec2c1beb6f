import tempfile
import unittest
from pathlib import Path

import numpy as np

from seizure.errors import RecordTooShortError, SampleCountError
from seizure.features.io import export_features_csv, load_features, save_features
from seizure.features.lfcc import (
    FeatureConfig,
    FeatureSequence,
    append_derivatives,
    epoch_blocks,
    extract_features,
    filterbank_energies,
    frame_signal,
    lfcc_frame,
    lfcc_frames,
    linear_filterbank,
)
from seizure.signal.record import STANDARD_CHANNELS, EegRecord


def _noise_record(duration_s: float, channels: tuple[str, ...] = ("A", "B"), seed: int = 0) -> EegRecord:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * 250))
    return EegRecord.from_microvolts(channels, 250, rng.standard_normal((len(channels), n)) * 20.0, calibration=0.01)


class FramingTests(unittest.TestCase):
    def test_ten_seconds_give_ninety_nine_windows(self) -> None:
        windows = frame_signal(_noise_record(10.0), FeatureConfig())
        self.assertEqual(len(windows), 2)
        self.assertEqual(windows[0].shape, (99, 50))

    def test_windows_advance_by_one_frame(self) -> None:
        record = _noise_record(1.0, channels=("A",))
        windows = frame_signal(record, FeatureConfig())[0]
        np.testing.assert_array_equal(windows[1], record.samples[0, 25:75])

    def test_record_shorter_than_a_window_is_rejected(self) -> None:
        with self.assertRaises(RecordTooShortError):
            extract_features(_noise_record(0.19), FeatureConfig())


class LfccTests(unittest.TestCase):
    def setUp(self) -> None:
        self.cfg = FeatureConfig()

    def test_zero_window_gives_floor_energy_and_zero_cepstra(self) -> None:
        base = lfcc_frame(np.zeros(50), self.cfg)
        self.assertEqual(base.shape, (9,))
        self.assertAlmostEqual(base[0], np.log(self.cfg.energy_floor))
        np.testing.assert_allclose(base[1:], 0.0, atol=1e-9)

    def test_cepstra_are_invariant_to_amplitude_scale(self) -> None:
        window = np.random.default_rng(1).standard_normal(50)
        plain = lfcc_frame(window, self.cfg)
        scaled = lfcc_frame(7.5 * window, self.cfg)
        np.testing.assert_allclose(scaled[1:], plain[1:], atol=1e-9)
        self.assertAlmostEqual(scaled[0] - plain[0], 2.0 * np.log(7.5))

    def test_sinusoid_energy_peaks_in_its_filter(self) -> None:
        cfg = FeatureConfig(preemphasis=0.0)
        t = np.arange(cfg.window_samples) / cfg.sample_rate_hz
        energies = filterbank_energies(np.sin(2.0 * np.pi * 10.0 * t), cfg)
        centers = np.linspace(0.0, cfg.sample_rate_hz / 2.0, cfg.num_filters + 2)[1:-1]
        self.assertEqual(int(np.argmax(energies)), int(np.argmin(np.abs(centers - 10.0))))

    def test_filterbank_is_triangular_and_non_negative(self) -> None:
        fbank = linear_filterbank(24, 256, 250)
        self.assertEqual(fbank.shape, (24, 129))
        self.assertTrue(np.all(fbank >= 0.0))
        self.assertTrue(np.all(fbank.max(axis=1) <= 1.0))

    def test_batch_matches_single_frames(self) -> None:
        windows = np.random.default_rng(2).standard_normal((4, 50))
        batch = lfcc_frames(windows, self.cfg)
        for i in range(4):
            np.testing.assert_allclose(batch[i], lfcc_frame(windows[i], self.cfg))

    def test_constant_base_features_have_zero_derivatives(self) -> None:
        base = np.tile(np.arange(9, dtype=np.float64), (12, 1))
        full = append_derivatives(base, self.cfg)
        self.assertEqual(full.shape, (12, 26))
        np.testing.assert_array_equal(full[:, :9], base)
        np.testing.assert_allclose(full[:, 9:], 0.0, atol=1e-12)

    def test_linear_ramp_has_unit_delta(self) -> None:
        base = np.outer(np.arange(12, dtype=np.float64), np.ones(9))
        full = append_derivatives(base, self.cfg)
        np.testing.assert_allclose(full[2:-2, 9:18], 1.0, atol=1e-12)

    def test_too_few_frames_for_deltas(self) -> None:
        with self.assertRaises(RecordTooShortError):
            append_derivatives(np.zeros((3, 9)), self.cfg)

    def test_feature_dimensions_must_be_consistent(self) -> None:
        with self.assertRaises(ValueError):
            FeatureConfig(total_dim=40)


class ExtractFeaturesTests(unittest.TestCase):
    def test_full_montage_shape(self) -> None:
        record = _noise_record(10.0, channels=STANDARD_CHANNELS)
        feats = extract_features(record, FeatureConfig())
        self.assertEqual(feats.values.shape, (99, 22, 26))
        self.assertEqual(feats.num_epochs, 10)
        self.assertTrue(np.all(np.isfinite(feats.values)))

    def test_epoch_blocks_pad_the_last_epoch(self) -> None:
        feats = extract_features(_noise_record(10.0), FeatureConfig())
        blocks = epoch_blocks(feats)
        self.assertEqual(blocks.shape, (10, 10, 2, 26))
        np.testing.assert_array_equal(blocks[9, 9], feats.values[98])
        np.testing.assert_array_equal(blocks[3, 4], feats.values[34])

    def test_other_sample_rates_keep_the_frame_period(self) -> None:
        rng = np.random.default_rng(0)
        record = EegRecord.from_microvolts(("A",), 500, rng.standard_normal((1, 5000)))
        feats = extract_features(record, FeatureConfig())
        self.assertEqual(feats.values.shape, (99, 1, 26))

    def test_permuting_channels_permutes_features(self) -> None:
        record = _noise_record(3.0, channels=("A", "B", "C", "D"), seed=3)
        order = [2, 0, 3, 1]
        base = extract_features(record, FeatureConfig())
        permuted = extract_features(record.select_channels(order), FeatureConfig())
        self.assertEqual(permuted.channel_labels, ("C", "A", "D", "B"))
        np.testing.assert_allclose(permuted.values, base.values[:, order])


class FeatureFileTests(unittest.TestCase):
    def test_save_load_round_trip(self) -> None:
        feats = extract_features(_noise_record(3.0), FeatureConfig())
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.nfea"
            save_features(feats, path)
            self.assertEqual(load_features(path), feats)

    def test_truncated_file_is_a_sample_count_error(self) -> None:
        feats = FeatureSequence(np.zeros((5, 1, 3)), 0.1, ("A",), 0.6)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.nfea"
            save_features(feats, path)
            path.write_bytes(path.read_bytes()[:-8])
            with self.assertRaises(SampleCountError):
                load_features(path)

    def test_csv_export_has_one_row_per_frame_and_channel(self) -> None:
        feats = FeatureSequence(np.ones((4, 2, 3)), 0.1, ("A", "B"), 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.csv"
            export_features_csv(feats, path)
            lines = path.read_text().splitlines()
        self.assertEqual(lines[0], "frame,time_s,channel,f0,f1,f2")
        self.assertEqual(len(lines), 1 + 4 * 2)


if __name__ == "__main__":
    unittest.main()
