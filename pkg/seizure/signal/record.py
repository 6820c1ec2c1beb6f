"""EegRecord data model and the little-endian NDET signal file format."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from seizure.errors import (
    ChannelMismatchError,
    DataError,
    HeaderError,
    RangeError,
    SampleCountError,
)

logger = logging.getLogger(__name__)

MAGIC = b"NDET"
FORMAT_VERSION = 1
DEFAULT_SAMPLE_RATE_HZ = 250
INT16_MAX = np.iinfo(np.int16).max
INT16_MIN = np.iinfo(np.int16).min

# Standard 22-channel TCP bipolar montage.
STANDARD_CHANNELS: tuple[str, ...] = (
    "FP1-F7", "F7-T3", "T3-T5", "T5-O1",
    "FP2-F8", "F8-T4", "T4-T6", "T6-O2",
    "A1-T3", "T3-C3", "C3-CZ", "CZ-C4", "C4-T4", "T4-A2",
    "FP1-F3", "F3-C3", "C3-P3", "P3-O1",
    "FP2-F4", "F4-C4", "C4-P4", "P4-O2",
)

# magic, version u16, channels u16, rate u32, samples u64, calibration f64
_HEADER = struct.Struct("<4sHHIQd")
_LABEL_LEN = struct.Struct("<H")


@dataclass(frozen=True, eq=False)
class EegRecord:
    """Multichannel signal stored as raw int16 counts times a calibration factor (µV/count)."""

    channel_labels: tuple[str, ...]
    sample_rate_hz: int
    raw: np.ndarray
    calibration: float = 1.0
    _samples_uv: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        raw = np.asarray(self.raw)
        if raw.ndim != 2:
            raise DataError(f"samples must be channels x time, got shape {raw.shape}")
        if raw.shape[0] == 0:
            raise DataError("record has no channels")
        if raw.shape[1] == 0:
            raise DataError("record has no samples")
        if len(self.channel_labels) != raw.shape[0]:
            raise ChannelMismatchError(
                f"{len(self.channel_labels)} channel labels for {raw.shape[0]} data streams"
            )
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.isfinite(self.calibration) or self.calibration <= 0:
            raise DataError(f"calibration must be positive and finite, got {self.calibration}")
        if raw.dtype != np.int16:
            if not np.issubdtype(raw.dtype, np.integer):
                raise DataError(f"raw samples must be integers, got {raw.dtype}")
            if raw.max() > INT16_MAX or raw.min() < INT16_MIN:
                raise RangeError("raw sample outside the signed 16-bit range")
            raw = raw.astype(np.int16)
        raw = np.array(raw, dtype=np.int16, copy=True)
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "channel_labels", tuple(self.channel_labels))
        object.__setattr__(self, "calibration", float(self.calibration))

    @classmethod
    def from_microvolts(
        cls,
        channel_labels: tuple[str, ...] | list[str],
        sample_rate_hz: int,
        samples_uv: np.ndarray,
        calibration: float | None = None,
    ) -> EegRecord:
        """Quantize a float signal to 16 bits.

        Without an explicit calibration the full int16 range is used.
        """
        samples_uv = np.asarray(samples_uv, dtype=np.float64)
        if samples_uv.ndim != 2 or samples_uv.shape[0] == 0:
            raise DataError(f"samples must be a non-empty channels x time matrix, got {samples_uv.shape}")
        if not np.all(np.isfinite(samples_uv)):
            raise DataError("samples contain non-finite values")
        if calibration is None:
            peak = float(np.max(np.abs(samples_uv))) if samples_uv.size else 0.0
            calibration = peak / INT16_MAX if peak > 0 else 1.0
        counts = np.rint(samples_uv / calibration)
        if counts.size and (counts.max() > INT16_MAX or counts.min() < INT16_MIN):
            raise RangeError(
                f"sample of {np.max(np.abs(samples_uv)):.3f} uV exceeds the 16-bit range "
                f"at calibration {calibration} uV/count"
            )
        return cls(tuple(channel_labels), int(sample_rate_hz), counts.astype(np.int16), float(calibration))

    @property
    def samples(self) -> np.ndarray:
        """Calibrated samples in microvolts, channels x time."""
        if self._samples_uv is None:
            values = self.raw.astype(np.float64) * self.calibration
            values.setflags(write=False)
            object.__setattr__(self, "_samples_uv", values)
        return self._samples_uv

    @property
    def num_channels(self) -> int:
        return self.raw.shape[0]

    @property
    def num_samples(self) -> int:
        return self.raw.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate_hz

    def select_channels(self, order: list[int]) -> EegRecord:
        return EegRecord(
            tuple(self.channel_labels[i] for i in order),
            self.sample_rate_hz,
            self.raw[order],
            self.calibration,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EegRecord):
            return NotImplemented
        return (
            self.channel_labels == other.channel_labels
            and self.sample_rate_hz == other.sample_rate_hz
            and self.calibration == other.calibration
            and np.array_equal(self.raw, other.raw)
        )

    __hash__ = None  # type: ignore[assignment]


def save_record(record: EegRecord, path: str | Path) -> None:
    """Write a record in the NDET format (channel-major int16 samples)."""
    path = Path(path)
    parts = [
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            record.num_channels,
            record.sample_rate_hz,
            record.num_samples,
            record.calibration,
        )
    ]
    for label in record.channel_labels:
        encoded = label.encode("utf-8")
        parts.append(_LABEL_LEN.pack(len(encoded)))
        parts.append(encoded)
    parts.append(record.raw.astype("<i2").tobytes(order="C"))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(b"".join(parts))
    except OSError as e:
        raise DataError(f"Cannot write record {path}: {e}") from e


def load_record(path: str | Path) -> EegRecord:
    """Read an NDET file, reporting header, channel and sample-count problems distinctly."""
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read record {path}: {e}") from e

    if len(payload) < _HEADER.size:
        raise HeaderError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, n_channels, rate, n_samples, calibration = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise HeaderError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise HeaderError(f"{path}: unsupported format version {version}")
    if n_channels == 0 or rate == 0:
        raise HeaderError(f"{path}: header declares {n_channels} channels at {rate} Hz")

    offset = _HEADER.size
    labels: list[str] = []
    try:
        for _ in range(n_channels):
            (length,) = _LABEL_LEN.unpack_from(payload, offset)
            offset += _LABEL_LEN.size
            if offset + length > len(payload):
                raise HeaderError(f"{path}: truncated channel label table")
            labels.append(payload[offset : offset + length].decode("utf-8"))
            offset += length
    except struct.error as e:
        raise HeaderError(f"{path}: truncated channel label table") from e
    except UnicodeDecodeError as e:
        raise HeaderError(f"{path}: channel label is not UTF-8") from e

    data = payload[offset:]
    stream_bytes = n_samples * 2
    if len(data) != n_channels * stream_bytes:
        if stream_bytes and len(data) % stream_bytes == 0:
            raise ChannelMismatchError(
                f"{path}: header declares {n_channels} channels but file holds "
                f"{len(data) // stream_bytes} data streams"
            )
        raise SampleCountError(
            f"{path}: expected {n_channels * n_samples} samples, found {len(data) / 2:g}"
        )

    raw = np.frombuffer(data, dtype="<i2").reshape(n_channels, n_samples).astype(np.int16)
    return EegRecord(tuple(labels), int(rate), raw, float(calibration))
