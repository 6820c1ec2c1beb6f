"""Binary feature files (NFEA) and a CSV debug export."""

import csv
import logging
import struct
from pathlib import Path

import numpy as np

from seizure.errors import DataError, HeaderError, SampleCountError
from seizure.features.lfcc import FeatureSequence

logger = logging.getLogger(__name__)

MAGIC = b"NFEA"
FORMAT_VERSION = 1

# magic, version u16, frames u64, channels u16, dim u16, frame period f64, duration f64
_HEADER = struct.Struct("<4sHQHHdd")
_LABEL_LEN = struct.Struct("<H")


def save_features(seq: FeatureSequence, path: str | Path) -> None:
    path = Path(path)
    parts = [
        _HEADER.pack(
            MAGIC, FORMAT_VERSION, seq.num_frames, seq.num_channels, seq.dim,
            seq.frame_period_s, seq.record_duration_s,
        )
    ]
    for label in seq.channel_labels:
        encoded = label.encode("utf-8")
        parts.append(_LABEL_LEN.pack(len(encoded)))
        parts.append(encoded)
    parts.append(seq.values.astype("<f8").tobytes(order="C"))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(b"".join(parts))
    except OSError as e:
        raise DataError(f"Cannot write features {path}: {e}") from e


def load_features(path: str | Path) -> FeatureSequence:
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read features {path}: {e}") from e
    if len(payload) < _HEADER.size:
        raise HeaderError(f"{path}: file shorter than the feature header")
    magic, version, frames, channels, dim, period, duration = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise HeaderError(f"{path}: not a version-{FORMAT_VERSION} feature file")

    offset = _HEADER.size
    labels = []
    try:
        for _ in range(channels):
            (length,) = _LABEL_LEN.unpack_from(payload, offset)
            offset += _LABEL_LEN.size
            labels.append(payload[offset : offset + length].decode("utf-8"))
            offset += length
    except (struct.error, UnicodeDecodeError) as e:
        raise HeaderError(f"{path}: corrupt channel label table") from e

    data = payload[offset:]
    expected = frames * channels * dim * 8
    if len(data) != expected:
        raise SampleCountError(f"{path}: expected {expected} bytes of feature data, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8").reshape(frames, channels, dim)
    return FeatureSequence(values, period, tuple(labels), duration)


def export_features_csv(seq: FeatureSequence, path: str | Path) -> None:
    """One row per (frame, channel) with the feature columns f0..f{dim-1}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "time_s", "channel", *(f"f{i}" for i in range(seq.dim))])
        for t in range(seq.num_frames):
            time_s = f"{t * seq.frame_period_s:.3f}"
            for c, label in enumerate(seq.channel_labels):
                writer.writerow([t, time_s, label, *(repr(float(v)) for v in seq.values[t, c])])
    logger.debug("Exported %d feature rows to %s", seq.num_frames * seq.num_channels, path)
