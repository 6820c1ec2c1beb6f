import tempfile
import unittest
from pathlib import Path

import numpy as np

from seizure.errors import (
    ChannelMismatchError,
    DataError,
    HeaderError,
    RangeError,
    SampleCountError,
)
from seizure.signal.record import STANDARD_CHANNELS, EegRecord, load_record, save_record


def _record(n_samples: int = 500, channels: tuple[str, ...] = STANDARD_CHANNELS) -> EegRecord:
    rng = np.random.default_rng(5)
    raw = rng.integers(-2000, 2000, size=(len(channels), n_samples)).astype(np.int16)
    return EegRecord(channels, 250, raw, calibration=0.1)


class EegRecordTests(unittest.TestCase):
    def test_save_load_round_trip_is_bit_exact(self) -> None:
        record = _record()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.ndet"
            save_record(record, path)
            loaded = load_record(path)
        self.assertEqual(loaded, record)
        self.assertEqual(loaded.channel_labels, STANDARD_CHANNELS)
        np.testing.assert_array_equal(loaded.samples, record.samples)

    def test_single_sample_record_lasts_one_sample_period(self) -> None:
        record = EegRecord(("A",), 250, np.zeros((1, 1), dtype=np.int16))
        self.assertAlmostEqual(record.duration_s, 0.004)

    def test_samples_are_raw_times_calibration(self) -> None:
        record = EegRecord(("A", "B"), 250, np.array([[1, -2], [3, 4]], dtype=np.int16), calibration=0.5)
        np.testing.assert_allclose(record.samples, [[0.5, -1.0], [1.5, 2.0]])

    def test_rejects_label_count_mismatch(self) -> None:
        with self.assertRaises(ChannelMismatchError):
            EegRecord(("A", "B"), 250, np.zeros((3, 10), dtype=np.int16))

    def test_rejects_empty_channels(self) -> None:
        with self.assertRaises(DataError):
            EegRecord((), 250, np.zeros((0, 10), dtype=np.int16))

    def test_out_of_range_microvolts_raise_range_error(self) -> None:
        with self.assertRaises(RangeError):
            EegRecord.from_microvolts(("A",), 250, np.array([[4000.0]]), calibration=0.1)

    def test_out_of_range_raw_counts_raise_range_error(self) -> None:
        with self.assertRaises(RangeError):
            EegRecord(("A",), 250, np.array([[40000]], dtype=np.int32))

    def test_from_microvolts_uses_full_range_without_calibration(self) -> None:
        record = EegRecord.from_microvolts(("A",), 250, np.array([[-10.0, 5.0, 10.0]]))
        self.assertEqual(int(np.max(np.abs(record.raw))), np.iinfo(np.int16).max)
        np.testing.assert_allclose(record.samples, [[-10.0, 5.0, 10.0]], atol=record.calibration)

    def test_select_channels_reorders_labels_and_data(self) -> None:
        record = _record(channels=("A", "B", "C"))
        picked = record.select_channels([2, 0])
        self.assertEqual(picked.channel_labels, ("C", "A"))
        np.testing.assert_array_equal(picked.raw, record.raw[[2, 0]])


class RecordFileErrorTests(unittest.TestCase):
    def _payload(self, record: EegRecord) -> bytes:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rec.ndet"
            save_record(record, path)
            return path.read_bytes()

    def _load(self, payload: bytes) -> EegRecord:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.ndet"
            path.write_bytes(payload)
            return load_record(path)

    def test_missing_data_stream_is_a_channel_mismatch(self) -> None:
        record = _record(n_samples=100)
        payload = self._payload(record)
        with self.assertRaises(ChannelMismatchError):
            self._load(payload[: -100 * 2])

    def test_partial_stream_is_a_sample_count_mismatch(self) -> None:
        payload = self._payload(_record(n_samples=100))
        with self.assertRaises(SampleCountError):
            self._load(payload[:-2])

    def test_bad_magic_is_a_header_error(self) -> None:
        payload = self._payload(_record(n_samples=10))
        with self.assertRaises(HeaderError):
            self._load(b"XXXX" + payload[4:])

    def test_truncated_header_is_a_header_error(self) -> None:
        with self.assertRaises(HeaderError):
            self._load(b"NDET")

    def test_missing_file_is_a_data_error(self) -> None:
        with self.assertRaises(DataError):
            load_record("/tmp/does-not-exist-seizure.ndet")


if __name__ == "__main__":
    unittest.main()
