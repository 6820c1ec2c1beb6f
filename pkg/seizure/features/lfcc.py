"""LFCC front end: 0.2 s windows every 0.1 s, 9 base features plus regression deltas (26 total)."""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import librosa
import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.fft import dct

from seizure.errors import DataError, RecordTooShortError
from seizure.signal.record import EegRecord
from seizure.signal.tracks import EPOCH_DURATION_S

logger = logging.getLogger(__name__)


class FeatureConfig(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    frame_s: float = Field(default=0.1, gt=0)
    window_s: float = Field(default=0.2, gt=0)
    sample_rate_hz: int = Field(default=250, gt=0)
    num_filters: int = Field(default=24, ge=1)
    n_fft: int = Field(default=256, ge=2)
    base_dim: int = Field(default=9, ge=2)
    total_dim: int = Field(default=26, ge=2)
    preemphasis: float = Field(default=0.97, ge=0.0, lt=1.0)
    energy_floor: float = Field(default=1e-10, gt=0)
    delta_halfwidth: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def _check_dims(self) -> FeatureConfig:
        if self.window_s < self.frame_s:
            raise ValueError("window_s must be >= frame_s")
        if self.num_filters < self.base_dim:
            raise ValueError("num_filters must be >= base_dim")
        if not 0 <= self.delta_delta_dim <= self.base_dim:
            raise ValueError(
                f"total_dim {self.total_dim} must lie in [2*base_dim, 3*base_dim] for base_dim {self.base_dim}"
            )
        if self.n_fft < self.window_samples:
            raise ValueError(f"n_fft {self.n_fft} shorter than the {self.window_samples}-sample window")
        return self

    @property
    def num_cepstra(self) -> int:
        return self.base_dim - 1

    @property
    def delta_delta_dim(self) -> int:
        return self.total_dim - 2 * self.base_dim

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate_hz))

    @property
    def hop_samples(self) -> int:
        return int(round(self.frame_s * self.sample_rate_hz))

    @property
    def frames_per_epoch(self) -> int:
        return int(round(EPOCH_DURATION_S / self.frame_s))

    def for_rate(self, sample_rate_hz: int) -> FeatureConfig:
        if sample_rate_hz == self.sample_rate_hz:
            return self
        return self.model_validate({**self.model_dump(), "sample_rate_hz": sample_rate_hz})


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    """frames x channels x dim feature matrix at a fixed frame period."""

    values: np.ndarray
    frame_period_s: float
    channel_labels: tuple[str, ...]
    record_duration_s: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 3:
            raise DataError(f"feature values must be frames x channels x dim, got {values.shape}")
        if values.shape[1] != len(self.channel_labels):
            raise DataError(f"{len(self.channel_labels)} labels for {values.shape[1]} feature channels")
        if not np.all(np.isfinite(values)):
            raise DataError("feature values contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_labels", tuple(self.channel_labels))

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def num_epochs(self) -> int:
        return int(np.floor(self.record_duration_s / EPOCH_DURATION_S + 1e-9))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return (
            self.frame_period_s == other.frame_period_s
            and self.channel_labels == other.channel_labels
            and self.record_duration_s == other.record_duration_s
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


@functools.lru_cache(maxsize=16)
def linear_filterbank(num_filters: int, n_fft: int, sample_rate_hz: int) -> np.ndarray:
    """Triangular filters with centers evenly spaced from 0 to Nyquist; shape (num_filters, n_fft//2+1)."""
    edges = np.linspace(0.0, sample_rate_hz / 2.0, num_filters + 2)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate_hz)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    weights.setflags(write=False)
    return weights


def frame_signal(record: EegRecord, cfg: FeatureConfig) -> list[np.ndarray]:
    """Per-channel (frames, window_samples) views of the calibrated signal."""
    cfg = cfg.for_rate(record.sample_rate_hz)
    win, hop = cfg.window_samples, cfg.hop_samples
    if record.num_samples < win:
        raise RecordTooShortError(
            f"record of {record.duration_s:.3f} s is shorter than one {cfg.window_s} s analysis window"
        )
    samples = record.samples
    return [
        librosa.util.frame(np.ascontiguousarray(samples[c]), frame_length=win, hop_length=hop, axis=0)
        for c in range(record.num_channels)
    ]


def _preemphasize(windows: np.ndarray, coefficient: float) -> np.ndarray:
    if coefficient == 0.0:
        return windows
    out = windows.copy()
    out[:, 1:] -= coefficient * windows[:, :-1]
    return out


def filterbank_energies(windows: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """Linear-filterbank energies (floored) of one window or a (frames, samples) batch."""
    windows = np.asarray(windows, dtype=np.float64)
    single = windows.ndim == 1
    batch = np.atleast_2d(windows)
    if batch.shape[1] != cfg.window_samples:
        raise DataError(f"window of {batch.shape[1]} samples, expected {cfg.window_samples}")
    shaped = _preemphasize(batch, cfg.preemphasis) * np.hamming(cfg.window_samples)
    power = np.abs(np.fft.rfft(shaped, n=cfg.n_fft, axis=1)) ** 2
    fbank = linear_filterbank(cfg.num_filters, cfg.n_fft, cfg.sample_rate_hz)
    energies = np.maximum(power @ fbank.T, cfg.energy_floor)
    return energies[0] if single else energies


def lfcc_frames(windows: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """Base features for a (frames, samples) batch: [log energy, c1..c{base_dim-1}]."""
    windows = np.asarray(windows, dtype=np.float64)
    log_energy = np.log(np.maximum(np.sum(windows**2, axis=1), cfg.energy_floor))
    cepstra = dct(np.log(filterbank_energies(windows, cfg)), type=2, norm="ortho", axis=1)
    return np.column_stack([log_energy, cepstra[:, 1 : cfg.num_cepstra + 1]])


def lfcc_frame(window: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise DataError(f"expected a 1-D window, got shape {window.shape}")
    return lfcc_frames(window[None, :], cfg)[0]


def append_derivatives(base: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """Append regression deltas of all base columns and delta-deltas of the leading ones."""
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 2 or base.shape[1] != cfg.base_dim:
        raise DataError(f"base features must be frames x {cfg.base_dim}, got {base.shape}")
    width = 2 * cfg.delta_halfwidth + 1
    if base.shape[0] < width:
        raise RecordTooShortError(
            f"{base.shape[0]} frames is too few for regression deltas of half-width {cfg.delta_halfwidth}"
        )
    deltas = librosa.feature.delta(base, width=width, order=1, axis=0, mode="nearest")
    second = librosa.feature.delta(
        deltas[:, : cfg.delta_delta_dim], width=width, order=1, axis=0, mode="nearest"
    )
    return np.concatenate([base, deltas, second], axis=1)


def epoch_blocks(seq: FeatureSequence) -> np.ndarray:
    """Group frames into whole epochs: (epochs, frames_per_epoch, channels, dim).

    Frame count trails the epoch grid by one frame (the last window ends at the
    record end), so missing trailing frames replicate the final frame.
    """
    per_epoch = int(round(EPOCH_DURATION_S / seq.frame_period_s))
    n_epochs = seq.num_epochs
    needed = n_epochs * per_epoch
    values = seq.values
    if needed > seq.num_frames:
        pad = np.repeat(values[-1:], needed - seq.num_frames, axis=0)
        values = np.concatenate([values, pad], axis=0)
    return values[:needed].reshape(n_epochs, per_epoch, seq.num_channels, seq.dim)


def extract_features(record: EegRecord, cfg: FeatureConfig) -> FeatureSequence:
    cfg = cfg.for_rate(record.sample_rate_hz)
    per_channel = [append_derivatives(lfcc_frames(w, cfg), cfg) for w in frame_signal(record, cfg)]
    values = np.stack(per_channel, axis=1)
    logger.debug("Extracted features %s from %.1f s record", values.shape, record.duration_s)
    return FeatureSequence(values, cfg.frame_s, record.channel_labels, record.duration_s)
