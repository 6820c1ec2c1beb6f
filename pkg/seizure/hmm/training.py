"""Supervised GMM-HMM training: uniform-segmentation k-means init, then Baum-Welch."""

from __future__ import annotations

import logging
from collections import defaultdict

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import KMeans

from seizure.errors import DataError, ShapeError
from seizure.features.lfcc import FeatureSequence, epoch_blocks
from seizure.hmm.model import GmmHmm, HmmConfig, state_log_likelihoods
from seizure.models import Label
from seizure.signal.tracks import EpochLabelTrack

logger = logging.getLogger(__name__)

_MIN_OCCUPANCY = 1e-10


def _as_sequences(sequences: list[np.ndarray] | np.ndarray, num_states: int) -> list[np.ndarray]:
    if len(sequences) == 0:
        raise DataError("empty training set")
    result = []
    for i, seq in enumerate(sequences):
        seq = np.asarray(seq, dtype=np.float64)
        if seq.ndim != 2:
            raise ShapeError(f"training sequence {i} must be (frames, dim), got {seq.shape}")
        if seq.shape[0] < num_states:
            raise DataError(f"training sequence {i} has {seq.shape[0]} frames, fewer than {num_states} states")
        result.append(seq)
    dims = {seq.shape[1] for seq in result}
    if len(dims) != 1:
        raise ShapeError(f"training sequences disagree on dimension: {sorted(dims)}")
    return result


def _variance_floor(frames: np.ndarray, cfg: HmmConfig) -> np.ndarray:
    return np.maximum(cfg.variance_floor_scale * frames.var(axis=0), cfg.min_variance)


def _state_mixture(
    frames: np.ndarray, num_mixtures: int, floor: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    distinct = np.unique(frames, axis=0).shape[0]
    k = min(num_mixtures, distinct)
    if k < num_mixtures:
        logger.warning("Only %d distinct frames for %d mixtures; duplicating components", distinct, num_mixtures)
    assignment = KMeans(n_clusters=k, n_init=3, random_state=seed % 2**32).fit_predict(frames)

    counts = np.bincount(assignment, minlength=k).astype(np.float64)
    means = np.stack([frames[assignment == j].mean(axis=0) for j in range(k)])
    # Singleton clusters borrow the state-wide spread.
    spread = frames.var(axis=0)
    variances = np.stack([frames[assignment == j].var(axis=0) if counts[j] > 1 else spread for j in range(k)])
    variances = np.maximum(variances, floor)
    weights = counts / counts.sum()

    if k < num_mixtures:
        # Split the heaviest component's weight across copies of itself.
        heaviest = int(np.argmax(weights))
        extra = num_mixtures - k
        share = weights[heaviest] / (extra + 1)
        weights[heaviest] = share
        weights = np.concatenate([weights, np.full(extra, share)])
        means = np.concatenate([means, np.repeat(means[heaviest : heaviest + 1], extra, axis=0)])
        variances = np.concatenate([variances, np.repeat(variances[heaviest : heaviest + 1], extra, axis=0)])
    return weights, means, variances


def init_gmm_hmm(
    sequences: list[np.ndarray], label: Label | str, cfg: HmmConfig, seed: int
) -> GmmHmm:
    """Uniform segmentation of every sequence into states, then k-means per state."""
    seqs = _as_sequences(sequences, cfg.num_states)
    s = cfg.num_states
    rng = np.random.default_rng(seed)

    per_state: list[list[np.ndarray]] = [[] for _ in range(s)]
    for seq in seqs:
        for state, chunk in enumerate(np.array_split(seq, s)):
            per_state[state].append(chunk)
    all_frames = np.concatenate(seqs)
    floor = _variance_floor(all_frames, cfg)

    weights, means, variances = [], [], []
    for state in range(s):
        frames = np.concatenate(per_state[state])
        if frames.shape[0] > cfg.kmeans_max_frames:
            frames = frames[rng.choice(frames.shape[0], cfg.kmeans_max_frames, replace=False)]
        w, m, v = _state_mixture(frames, cfg.num_mixtures, floor, seed + state)
        weights.append(w)
        means.append(m)
        variances.append(v)

    mean_len = float(np.mean([seq.shape[0] for seq in seqs]))
    self_loop = float(np.clip(1.0 - s / mean_len, 0.1, 0.9))
    transitions = np.eye(s) * self_loop + np.eye(s, k=1) * (1.0 - self_loop)
    transitions[-1, -1] = 1.0

    return GmmHmm(
        label=Label(label),
        transitions=transitions,
        weights=np.stack(weights),
        means=np.stack(means),
        variances=np.stack(variances),
        variance_floor=floor,
    )


class _Accumulator:
    """Sufficient statistics of one E-step, summed over all sequences."""

    def __init__(self, s: int, m: int) -> None:
        self.loglik = 0.0
        self.transitions = np.zeros((s, s))
        self.occupancy = np.zeros((s, m))
        self.frames: list[np.ndarray] = []
        self.posteriors: list[np.ndarray] = []


def _forward_backward(model: GmmHmm, batch: np.ndarray, acc: _Accumulator) -> None:
    """E-step on a (B, T, D) batch of equal-length sequences."""
    b, t_len, d = batch.shape
    s = model.num_states
    frames = batch.reshape(b * t_len, d)
    log_b_flat, comps = state_log_likelihoods(model, frames)
    log_b = log_b_flat.reshape(b, t_len, s)
    log_a = model.log_transitions

    with np.errstate(divide="ignore", invalid="ignore"):
        log_alpha = np.empty((b, t_len, s))
        log_alpha[:, 0] = model.log_start[None, :] + log_b[:, 0]
        for t in range(1, t_len):
            log_alpha[:, t] = logsumexp(log_alpha[:, t - 1, :, None] + log_a[None], axis=1) + log_b[:, t]

        log_beta = np.zeros((b, t_len, s))
        for t in range(t_len - 2, -1, -1):
            nxt = (log_b[:, t + 1] + log_beta[:, t + 1])[:, None, :]
            log_beta[:, t] = logsumexp(log_a[None] + nxt, axis=2)

        loglik = logsumexp(log_alpha[:, -1], axis=1)
        gamma = np.exp(log_alpha + log_beta - loglik[:, None, None])

        xi = np.exp(
            log_alpha[:, :-1, :, None]
            + log_a[None, None]
            + (log_b[:, 1:] + log_beta[:, 1:])[:, :, None, :]
            - loglik[:, None, None, None]
        )
        component_post = gamma.reshape(b * t_len, s)[:, :, None] * np.exp(comps - log_b_flat[:, :, None])

    component_post = np.nan_to_num(component_post, nan=0.0)
    acc.loglik += float(loglik.sum())
    acc.transitions += xi.sum(axis=(0, 1))
    acc.occupancy += component_post.sum(axis=0)
    acc.frames.append(frames)
    acc.posteriors.append(component_post)


def _e_step(model: GmmHmm, groups: dict[int, np.ndarray]) -> _Accumulator:
    acc = _Accumulator(model.num_states, model.num_mixtures)
    for batch in groups.values():
        _forward_backward(model, batch, acc)
    return acc


def _m_step(model: GmmHmm, acc: _Accumulator) -> GmmHmm:
    frames = np.concatenate(acc.frames)
    post = np.concatenate(acc.posteriors)
    occ = acc.occupancy

    row_sums = acc.transitions.sum(axis=1, keepdims=True)
    transitions = np.where(row_sums > _MIN_OCCUPANCY, acc.transitions / np.maximum(row_sums, _MIN_OCCUPANCY), model.transitions)

    state_occ = occ.sum(axis=1, keepdims=True)
    weights = np.where(state_occ > _MIN_OCCUPANCY, occ / np.maximum(state_occ, _MIN_OCCUPANCY), model.weights)

    live = occ > _MIN_OCCUPANCY
    safe_occ = np.where(live, occ, 1.0)[:, :, None]
    means = np.einsum("tsm,td->smd", post, frames) / safe_occ
    means = np.where(live[:, :, None], means, model.means)

    # Centered second moments avoid cancellation in E[x^2] - E[x]^2.
    variances = np.empty_like(model.variances)
    for state in range(model.num_states):
        diff = frames[:, None, :] - means[state][None]
        variances[state] = np.einsum("tm,tmd->md", post[:, state], diff * diff) / safe_occ[state]
    variances = np.where(live[:, :, None], variances, model.variances)
    variances = np.maximum(variances, model.variance_floor)

    return model.replace(transitions=transitions, weights=weights, means=means, variances=variances)


def _group_by_length(seqs: list[np.ndarray]) -> dict[int, np.ndarray]:
    groups: dict[int, list[np.ndarray]] = defaultdict(list)
    for seq in seqs:
        groups[seq.shape[0]].append(seq)
    return {length: np.stack(items) for length, items in sorted(groups.items())}


def baum_welch(
    init: GmmHmm, sequences: list[np.ndarray], iterations: int = 20
) -> tuple[GmmHmm, list[float]]:
    """EM re-estimation. The trace holds the total log-likelihood before each update and after the last."""
    seqs = _as_sequences(sequences, init.num_states)
    if seqs[0].shape[1] != init.dim:
        raise ShapeError(f"{seqs[0].shape[1]}-dim sequences for a {init.dim}-dim model")
    groups = _group_by_length(seqs)

    model = init
    trace: list[float] = []
    for iteration in range(iterations):
        acc = _e_step(model, groups)
        trace.append(acc.loglik)
        logger.debug("Baum-Welch %s iter %d: loglik=%.6f", model.label.value, iteration, acc.loglik)
        model = _m_step(model, acc)
    trace.append(_e_step(model, groups).loglik)
    return model, trace


def baum_welch_train(init: GmmHmm, sequences: list[np.ndarray], iterations: int = 20) -> GmmHmm:
    model, _ = baum_welch(init, sequences, iterations)
    return model


def _channel_epochs(blocks: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """(epochs, frames, channels, dim) -> (n, frames, dim) for the selected epochs, all channels."""
    chosen = blocks[mask]
    return chosen.transpose(0, 2, 1, 3).reshape(-1, blocks.shape[1], blocks.shape[3])


def collect_training_sequences(
    features: list[FeatureSequence],
    epoch_labels: list[EpochLabelTrack],
    cfg: HmmConfig,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel 1 s epochs: all seizure ones, background sampled to balance_ratio x seizure count."""
    if len(features) != len(epoch_labels):
        raise DataError(f"{len(features)} feature sequences for {len(epoch_labels)} label tracks")
    seiz_parts, bckg_parts = [], []
    for feats, labels in zip(features, epoch_labels):
        blocks = epoch_blocks(feats)
        n = min(blocks.shape[0], len(labels))
        mask = labels.is_seizure[:n]
        seiz_parts.append(_channel_epochs(blocks[:n], mask))
        bckg_parts.append(_channel_epochs(blocks[:n], ~mask))

    seiz = np.concatenate(seiz_parts)
    bckg = np.concatenate(bckg_parts)
    if seiz.shape[0] == 0 or bckg.shape[0] == 0:
        raise DataError("training corpus must contain both seiz and bckg epochs")

    rng = np.random.default_rng(seed)
    if seiz.shape[0] > cfg.max_sequences_per_class:
        seiz = seiz[np.sort(rng.choice(seiz.shape[0], cfg.max_sequences_per_class, replace=False))]
    n_bckg = min(bckg.shape[0], int(round(cfg.balance_ratio * seiz.shape[0])), cfg.max_sequences_per_class)
    if n_bckg < bckg.shape[0]:
        bckg = bckg[np.sort(rng.choice(bckg.shape[0], n_bckg, replace=False))]
    if bckg.shape[0] < cfg.balance_ratio * seiz.shape[0]:
        logger.warning("Only %d bckg sequences available for %d seiz sequences", bckg.shape[0], seiz.shape[0])
    return seiz, bckg


def train_channel_models(
    features: list[FeatureSequence],
    epoch_labels: list[EpochLabelTrack],
    cfg: HmmConfig,
    seed: int,
) -> tuple[GmmHmm, GmmHmm]:
    """Train the channel-independent seiz and bckg models on balanced epoch sequences."""
    seiz_seqs, bckg_seqs = collect_training_sequences(features, epoch_labels, cfg, seed)
    logger.info(
        "Training HMMs on %d seiz / %d bckg channel-epochs (%d iterations)",
        seiz_seqs.shape[0], bckg_seqs.shape[0], cfg.iterations,
    )
    models = []
    for offset, (label, seqs) in enumerate(((Label.SEIZ, seiz_seqs), (Label.BCKG, bckg_seqs))):
        init = init_gmm_hmm(list(seqs), label, cfg, seed + 101 * offset)
        model, trace = baum_welch(init, list(seqs), cfg.iterations)
        logger.info("HMM %s: loglik %.2f -> %.2f", label.value, trace[0], trace[-1])
        models.append(model)
    return models[0], models[1]
