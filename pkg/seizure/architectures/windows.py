"""Centered context windows, class-balanced epoch sampling, input scalers and lazy example sources."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np
from sklearn.preprocessing import MinMaxScaler, StandardScaler

from seizure.errors import DataError
from seizure.features.lfcc import FeatureSequence, epoch_blocks
from seizure.signal.tracks import EpochLabelTrack

logger = logging.getLogger(__name__)


def window_indices(n_units: int, centers: np.ndarray, width_epochs: int, units_per_epoch: int = 1) -> np.ndarray:
    """Unit indices of centered windows, (len(centers), width_epochs * units_per_epoch).

    Window for epoch e spans epochs e - w//2 .. e + w//2; indices outside the
    record replicate the nearest edge unit.
    """
    half = width_epochs // 2
    offsets = np.arange(width_epochs * units_per_epoch) - half * units_per_epoch
    idx = np.asarray(centers, dtype=np.int64)[:, None] * units_per_epoch + offsets[None, :]
    return np.clip(idx, 0, n_units - 1)


def centered_window(units: np.ndarray, center: int, width_epochs: int, units_per_epoch: int = 1) -> np.ndarray:
    return units[window_indices(units.shape[0], np.array([center]), width_epochs, units_per_epoch)[0]]


def epoch_vectors(feats: FeatureSequence, pool_frames: bool = True) -> np.ndarray:
    """(epochs, channels*dim) frame-averaged vectors, or (epochs, frames*channels*dim) unpooled."""
    blocks = epoch_blocks(feats)
    if pool_frames:
        blocks = blocks.mean(axis=1)
    return blocks.reshape(blocks.shape[0], -1)


def one_hot_targets(is_seizure: np.ndarray) -> np.ndarray:
    """(n, 2) targets ordered (seiz, bckg)."""
    is_seizure = np.asarray(is_seizure, dtype=bool)
    return np.column_stack([is_seizure, ~is_seizure]).astype(np.float64)


def balanced_epoch_sample(
    label_tracks: list[EpochLabelTrack],
    ratio: float,
    seed: int,
    max_examples: int | None = None,
) -> np.ndarray:
    """(record, epoch) pairs: every seizure epoch plus ratio x as many sampled background epochs."""
    seiz, bckg = [], []
    for r, track in enumerate(label_tracks):
        epochs = np.arange(len(track))
        seiz.append(np.column_stack([np.full(len(epochs), r), epochs])[track.is_seizure])
        bckg.append(np.column_stack([np.full(len(epochs), r), epochs])[~track.is_seizure])
    seiz_idx = np.concatenate(seiz) if seiz else np.zeros((0, 2), dtype=np.int64)
    bckg_idx = np.concatenate(bckg) if bckg else np.zeros((0, 2), dtype=np.int64)
    if seiz_idx.shape[0] == 0 or bckg_idx.shape[0] == 0:
        raise DataError("corpus must contain both seiz and bckg epochs")

    rng = np.random.default_rng(seed)
    if max_examples is not None:
        cap = max(1, int(max_examples / (1.0 + ratio)))
        if seiz_idx.shape[0] > cap:
            seiz_idx = seiz_idx[np.sort(rng.choice(seiz_idx.shape[0], cap, replace=False))]
    n_bckg = min(bckg_idx.shape[0], max(1, int(round(ratio * seiz_idx.shape[0]))))
    if n_bckg < ratio * seiz_idx.shape[0]:
        logger.warning("Class balancing under-sampled: %d bckg epochs for %d seiz", n_bckg, seiz_idx.shape[0])
    bckg_idx = bckg_idx[np.sort(rng.choice(bckg_idx.shape[0], n_bckg, replace=False))]

    index = np.concatenate([seiz_idx, bckg_idx])
    order = np.lexsort((index[:, 1], index[:, 0]))
    return index[order].astype(np.int64)


@dataclass(frozen=True)
class AffineScaler:
    """Per-column x * mul + add; fitted with scikit-learn scalers and stored as plain arrays."""

    mul: np.ndarray
    add: np.ndarray

    @classmethod
    def standard(cls, data: np.ndarray) -> AffineScaler:
        scaler = StandardScaler().fit(np.asarray(data, dtype=np.float64))
        return cls(mul=1.0 / scaler.scale_, add=-scaler.mean_ / scaler.scale_)

    @classmethod
    def minmax(cls, data: np.ndarray) -> AffineScaler:
        scaler = MinMaxScaler().fit(np.asarray(data, dtype=np.float64))
        return cls(mul=scaler.scale_.copy(), add=scaler.min_.copy())

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.mul + self.add


class WindowSource:
    """Network inputs built on demand from per-record unit arrays (epochs or frames)."""

    def __init__(
        self,
        units: list[np.ndarray],
        index: np.ndarray,
        targets: np.ndarray,
        width_epochs: int | None,
        units_per_epoch: int = 1,
        finish: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> None:
        if index.shape[0] != targets.shape[0]:
            raise DataError(f"{index.shape[0]} examples for {targets.shape[0]} targets")
        self.units = units
        self.index = index
        self.targets = targets
        self.width_epochs = width_epochs
        self.units_per_epoch = units_per_epoch
        self.finish = finish

    def __len__(self) -> int:
        return int(self.index.shape[0])

    def inputs(self, rows: np.ndarray) -> np.ndarray:
        picked = self.index[rows]
        out = []
        for record, epoch in picked:
            units = self.units[record]
            if self.width_epochs is None:
                out.append(units[epoch])
            else:
                out.append(centered_window(units, int(epoch), self.width_epochs, self.units_per_epoch))
        batch = np.stack(out)
        return self.finish(batch) if self.finish is not None else batch

    def take(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs(rows), self.targets[rows]


def record_batches(
    units: np.ndarray,
    n_epochs: int,
    width_epochs: int | None,
    units_per_epoch: int = 1,
    batch_size: int = 64,
) -> Iterator[np.ndarray]:
    """Inputs for every epoch of one record, in order, in bounded-size batches."""
    for start in range(0, n_epochs, batch_size):
        centers = np.arange(start, min(start + batch_size, n_epochs))
        if width_epochs is None:
            yield units[centers]
        else:
            yield units[window_indices(units.shape[0], centers, width_epochs, units_per_epoch)]
