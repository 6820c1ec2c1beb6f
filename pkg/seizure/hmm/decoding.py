"""Viterbi decoding and per-epoch, per-channel scoring with a fresh start each epoch."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from seizure.errors import DataError, ShapeError
from seizure.features.lfcc import FeatureSequence, epoch_blocks
from seizure.hmm.model import GmmHmm, state_log_likelihoods

logger = logging.getLogger(__name__)


def _viterbi_batch(model: GmmHmm, log_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log_b: (B, T, S) emission scores. Returns paths (B, T) and scores (B,)."""
    n, t_len, s = log_b.shape
    log_a = model.log_transitions
    delta = model.log_start[None, :] + log_b[:, 0]
    backpointers = np.zeros((n, t_len, s), dtype=np.int64)
    for t in range(1, t_len):
        candidates = delta[:, :, None] + log_a[None, :, :]
        backpointers[:, t] = np.argmax(candidates, axis=1)
        delta = np.max(candidates, axis=1) + log_b[:, t]

    scores = np.max(delta, axis=1)
    paths = np.zeros((n, t_len), dtype=np.int64)
    paths[:, -1] = np.argmax(delta, axis=1)
    rows = np.arange(n)
    for t in range(t_len - 1, 0, -1):
        paths[:, t - 1] = backpointers[rows, t, paths[:, t]]
    return paths, scores


def viterbi_decode(model: GmmHmm, frames: np.ndarray) -> tuple[np.ndarray, float]:
    """Best left-to-right state path and its joint log-probability."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ShapeError(f"expected a non-empty (frames, dim) sequence, got {frames.shape}")
    log_b, _ = state_log_likelihoods(model, frames)
    paths, scores = _viterbi_batch(model, log_b[None])
    return paths[0], float(scores[0])


def viterbi_scores(model: GmmHmm, sequences: np.ndarray) -> np.ndarray:
    """Viterbi log scores for a (B, T, D) stack of equal-length sequences."""
    b, t_len, d = sequences.shape
    log_b, _ = state_log_likelihoods(model, sequences.reshape(b * t_len, d))
    _, scores = _viterbi_batch(model, log_b.reshape(b, t_len, model.num_states))
    return scores


@dataclass(frozen=True, eq=False)
class EpochScoreGrid:
    """Viterbi log scores per epoch and channel; last axis is (seiz, bckg)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 3 or values.shape[2] != 2:
            raise ShapeError(f"score grid must be epochs x channels x 2, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_epochs(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    @property
    def flattened(self) -> np.ndarray:
        """(epochs, 2 * channels) supervector rows: c0_seiz, c0_bckg, c1_seiz, ..."""
        return self.values.reshape(self.num_epochs, 2 * self.num_channels)

    @property
    def llr(self) -> np.ndarray:
        return self.values[:, :, 0] - self.values[:, :, 1]


def epoch_scores(seiz: GmmHmm, bckg: GmmHmm, feats: FeatureSequence) -> EpochScoreGrid:
    if seiz.dim != feats.dim or bckg.dim != feats.dim:
        raise ShapeError(f"models of dimension {seiz.dim}/{bckg.dim} cannot score {feats.dim}-dim features")
    blocks = epoch_blocks(feats)
    n_epochs, per_epoch, channels, dim = blocks.shape
    if n_epochs == 0:
        raise DataError(f"record of {feats.record_duration_s:.2f} s holds no whole epoch")
    sequences = blocks.transpose(0, 2, 1, 3).reshape(n_epochs * channels, per_epoch, dim)
    grid = np.stack([viterbi_scores(seiz, sequences), viterbi_scores(bckg, sequences)], axis=-1)
    logger.debug("Scored %d epochs x %d channels", n_epochs, channels)
    return EpochScoreGrid(grid.reshape(n_epochs, channels, 2))
