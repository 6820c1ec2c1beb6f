"""Synthetic labeled EEG: 1/f background, 3 Hz spike-and-wave seizures, bckg artifacts."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from seizure.errors import ConfigError
from seizure.models import AnnotationEvent, AnnotationSet, Label
from seizure.signal.record import INT16_MAX, STANDARD_CHANNELS, EegRecord

logger = logging.getLogger(__name__)

_MIN_NOISE_FREQ_HZ = 0.5
_TAPER_S = 0.5


class InstrumentationProfile(BaseModel):
    """Recording-chain characteristics; a second profile stands in for a different hospital."""

    model_config = {"frozen": True, "extra": "forbid"}

    name: str = "reference"
    gain: float = Field(default=1.0, gt=0)
    noise_exponent: float = Field(default=1.0, ge=0.0, le=3.0)
    line_noise_uv: float = Field(default=0.0, ge=0.0)
    line_frequency_hz: float = Field(default=60.0, gt=0)
    calibration_uv: float = Field(default=0.1, gt=0)


class SynthesisConfig(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    duration_s: float = Field(default=60.0, gt=0)
    sample_rate_hz: int = Field(default=250, gt=0)
    num_channels: int = Field(default=22, ge=1)

    # Seizure events: an explicit count wins over a target fraction.
    seizure_count: int | None = Field(default=None, ge=0)
    seizure_fraction: float = Field(default=0.1, ge=0.0, le=1.0)
    seizure_min_s: float = Field(default=5.0, gt=0)
    seizure_max_s: float = Field(default=20.0, gt=0)
    seizure_frequency_hz: float = Field(default=3.0, gt=0)
    seizure_channel_fraction: float = Field(default=0.8, gt=0, le=1.0)
    snr_db: float = 12.0
    min_gap_s: float = Field(default=2.0, ge=0)

    background_uv: float = Field(default=20.0, gt=0)

    # Artifacts (eye/muscle) on at most a few channels, labeled bckg.
    artifact_rate_per_min: float = Field(default=2.0, ge=0)
    artifact_amplitude_uv: float = Field(default=150.0, ge=0)
    artifact_max_channels: int = Field(default=3, ge=1)

    # Intermittent rhythmic delta slowing, labeled bckg.
    slowing_rate_per_min: float = Field(default=0.5, ge=0)
    slowing_amplitude_uv: float = Field(default=40.0, ge=0)

    instrumentation: InstrumentationProfile = Field(default_factory=InstrumentationProfile)

    @model_validator(mode="after")
    def _check_lengths(self) -> SynthesisConfig:
        if self.seizure_max_s < self.seizure_min_s:
            raise ValueError("seizure_max_s must be >= seizure_min_s")
        if self.artifact_max_channels > self.num_channels:
            raise ValueError("artifact_max_channels exceeds channel count")
        return self

    @property
    def channel_labels(self) -> tuple[str, ...]:
        if self.num_channels == len(STANDARD_CHANNELS):
            return STANDARD_CHANNELS
        return tuple(f"CH{i:02d}" for i in range(self.num_channels))


def _seizure_lengths(cfg: SynthesisConfig, duration_s: float, rng: np.random.Generator) -> list[float]:
    if cfg.seizure_count is not None:
        return [float(rng.uniform(cfg.seizure_min_s, cfg.seizure_max_s)) for _ in range(cfg.seizure_count)]

    remaining = cfg.seizure_fraction * duration_s
    lengths: list[float] = []
    while remaining >= cfg.seizure_min_s:
        length = min(float(rng.uniform(cfg.seizure_min_s, cfg.seizure_max_s)), remaining)
        lengths.append(length)
        remaining -= length
    return lengths


def _place_seizures(
    cfg: SynthesisConfig, n_samples: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Return sorted, non-overlapping (start, stop) sample spans."""
    rate = cfg.sample_rate_hz
    duration_s = n_samples / rate
    lengths = _seizure_lengths(cfg, duration_s, rng)
    if not lengths:
        return []

    free_s = duration_s - sum(lengths) - (len(lengths) - 1) * cfg.min_gap_s
    if free_s < 0:
        raise ConfigError(
            f"{len(lengths)} seizures totalling {sum(lengths):.1f} s do not fit in {duration_s:.1f} s "
            f"with {cfg.min_gap_s} s gaps"
        )
    gaps = rng.dirichlet(np.ones(len(lengths) + 1)) * free_s
    spans: list[tuple[int, int]] = []
    cursor = 0.0
    for i, length in enumerate(lengths):
        start_s = cursor + gaps[i] + (cfg.min_gap_s if i > 0 else 0.0)
        start = int(round(start_s * rate))
        stop = min(start + max(1, int(round(length * rate))), n_samples)
        spans.append((start, stop))
        cursor = stop / rate
    return spans


def _background(cfg: SynthesisConfig, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """1/f^k shaped noise, unit variance per channel before scaling, with a shared component."""
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / cfg.sample_rate_hz)
    shaping = 1.0 / np.maximum(freqs, _MIN_NOISE_FREQ_HZ) ** (cfg.instrumentation.noise_exponent / 2.0)
    shaping[0] = 0.0

    white = rng.standard_normal((cfg.num_channels + 1, n_samples))
    colored = np.fft.irfft(np.fft.rfft(white, axis=1) * shaping, n=n_samples, axis=1)
    std = colored.std(axis=1, keepdims=True)
    colored = np.divide(colored, std, out=np.zeros_like(colored), where=std > 0)
    mixed = 0.85 * colored[1:] + 0.3 * colored[:1]
    return cfg.background_uv * mixed


def _spike_and_wave(n: int, rate: int, freq_hz: float, phase0: float) -> np.ndarray:
    t = np.arange(n) / rate
    phase = (freq_hz * t + phase0) % 1.0
    spike = np.exp(-0.5 * ((phase - 0.15) / 0.025) ** 2)
    wave = np.sin(2.0 * np.pi * phase + np.pi)
    waveform = 2.0 * spike + 0.8 * wave
    waveform -= waveform.mean()
    std = waveform.std()
    return waveform / std if std > 0 else waveform


def _taper(n: int, rate: int) -> np.ndarray:
    ramp = min(int(_TAPER_S * rate), n // 2)
    envelope = np.ones(n)
    if ramp > 0:
        window = np.hanning(2 * ramp)
        envelope[:ramp] = window[:ramp]
        envelope[-ramp:] = window[ramp:]
    return envelope


def _add_seizures(
    signal: np.ndarray, cfg: SynthesisConfig, spans: list[tuple[int, int]], rng: np.random.Generator
) -> None:
    amplitude = cfg.background_uv * 10.0 ** (cfg.snr_db / 20.0)
    n_involved = max(1, int(round(cfg.seizure_channel_fraction * cfg.num_channels)))
    for start, stop in spans:
        n = stop - start
        freq = cfg.seizure_frequency_hz * (1.0 + 0.05 * rng.standard_normal())
        envelope = _taper(n, cfg.sample_rate_hz)
        channels = rng.choice(cfg.num_channels, size=n_involved, replace=False)
        base_phase = rng.uniform()
        for ch in channels:
            lag = rng.uniform(0.0, 0.06)
            gain = rng.uniform(0.6, 1.2)
            waveform = _spike_and_wave(n, cfg.sample_rate_hz, freq, base_phase + lag)
            signal[ch, start:stop] += amplitude * gain * envelope * waveform


def _background_spans(n_samples: int, spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    result = []
    cursor = 0
    for start, stop in spans:
        if start > cursor:
            result.append((cursor, start))
        cursor = stop
    if cursor < n_samples:
        result.append((cursor, n_samples))
    return result


def _pick_location(
    background: list[tuple[int, int]], length: int, rng: np.random.Generator
) -> int | None:
    candidates = [(a, b) for a, b in background if b - a >= length]
    if not candidates:
        return None
    room = np.array([b - a - length + 1 for a, b in candidates], dtype=np.float64)
    pick = int(rng.choice(len(candidates), p=room / room.sum()))
    return candidates[pick][0] + int(rng.integers(0, int(room[pick])))


def _add_transients(
    signal: np.ndarray,
    cfg: SynthesisConfig,
    background: list[tuple[int, int]],
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Add artifacts and rhythmic slowing inside background spans only."""
    rate = cfg.sample_rate_hz
    duration_min = signal.shape[1] / rate / 60.0

    n_artifacts = int(rng.poisson(cfg.artifact_rate_per_min * duration_min))
    placed_artifacts = 0
    for _ in range(n_artifacts):
        length = int(rng.uniform(0.3, 1.0) * rate)
        start = _pick_location(background, length, rng)
        if start is None:
            continue
        channels = rng.choice(
            cfg.num_channels, size=int(rng.integers(1, cfg.artifact_max_channels + 1)), replace=False
        )
        envelope = np.hanning(length)
        if rng.uniform() < 0.5:
            # eye movement: slow high-amplitude deflection
            shape = envelope * np.sign(rng.standard_normal())
        else:
            # muscle: broadband burst
            shape = 0.5 * envelope * rng.standard_normal(length)
        signal[channels, start : start + length] += cfg.artifact_amplitude_uv * shape
        placed_artifacts += 1

    n_slowing = int(rng.poisson(cfg.slowing_rate_per_min * duration_min))
    placed_slowing = 0
    for _ in range(n_slowing):
        length = int(rng.uniform(1.5, 4.0) * rate)
        start = _pick_location(background, length, rng)
        if start is None:
            continue
        n_ch = int(rng.integers(2, min(6, cfg.num_channels) + 1)) if cfg.num_channels >= 2 else 1
        channels = rng.choice(cfg.num_channels, size=n_ch, replace=False)
        t = np.arange(length) / rate
        wave = np.sin(2.0 * np.pi * rng.uniform(1.0, 2.5) * t + rng.uniform(0, 2 * np.pi))
        signal[channels, start : start + length] += cfg.slowing_amplitude_uv * _taper(length, rate) * wave
        placed_slowing += 1

    return placed_artifacts, placed_slowing


def _annotations(spans: list[tuple[int, int]], n_samples: int, rate: int) -> AnnotationSet:
    events: list[AnnotationEvent] = []
    cursor = 0
    for start, stop in spans:
        if start > cursor:
            events.append(AnnotationEvent(start_s=cursor / rate, stop_s=start / rate, label=Label.BCKG))
        events.append(AnnotationEvent(start_s=start / rate, stop_s=stop / rate, label=Label.SEIZ))
        cursor = stop
    if cursor < n_samples:
        events.append(AnnotationEvent(start_s=cursor / rate, stop_s=n_samples / rate, label=Label.BCKG))
    return AnnotationSet(events=tuple(events), record_duration_s=n_samples / rate)


def synthesize_record(config: SynthesisConfig, seed: int) -> tuple[EegRecord, AnnotationSet]:
    """Generate one labeled record; a pure function of (config, seed)."""
    rng = np.random.default_rng(seed)
    rate = config.sample_rate_hz
    n_samples = int(round(config.duration_s * rate))
    if n_samples < 1:
        raise ConfigError(f"duration {config.duration_s} s yields no samples at {rate} Hz")

    spans = _place_seizures(config, n_samples, rng)
    signal = _background(config, n_samples, rng)
    _add_seizures(signal, config, spans, rng)
    n_artifacts, n_slowing = _add_transients(signal, config, _background_spans(n_samples, spans), rng)

    profile = config.instrumentation
    signal *= profile.gain
    if profile.line_noise_uv > 0:
        t = np.arange(n_samples) / rate
        signal += profile.line_noise_uv * np.sin(2.0 * np.pi * profile.line_frequency_hz * t + rng.uniform(0, 2 * np.pi))

    limit = INT16_MAX * profile.calibration_uv
    clipped = int(np.count_nonzero(np.abs(signal) > limit))
    if clipped:
        logger.debug("Clipped %d samples at +/-%.1f uV", clipped, limit)
    signal = np.clip(signal, -limit, limit)

    record = EegRecord.from_microvolts(config.channel_labels, rate, signal, profile.calibration_uv)
    annotations = _annotations(spans, n_samples, rate)
    logger.debug(
        "Synthesized %.1f s: %d seizures, %d artifacts, %d slowing bursts (seed=%d)",
        record.duration_s, len(spans), n_artifacts, n_slowing, seed,
    )
    return record, annotations


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent per-item seeds derived deterministically from one seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def synthesize_corpus(
    config: SynthesisConfig, n_records: int, seed: int
) -> list[tuple[EegRecord, AnnotationSet]]:
    return [synthesize_record(config, s) for s in derive_seeds(seed, n_records)]
