"""Training, inference and persistence of the six detection systems."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from scipy.special import expit

from seizure.architectures.config import SystemConfig, SystemKind
from seizure.architectures.pipeline import build_system, network_layout
from seizure.architectures.windows import (
    AffineScaler,
    WindowSource,
    balanced_epoch_sample,
    epoch_vectors,
    one_hot_targets,
    record_batches,
    window_indices,
)
from seizure.dimred.pca import PcaModel, ipca_fit, load_pca, pca_fit, pca_transform, save_pca
from seizure.errors import (
    AlignmentError,
    ChannelMismatchError,
    ConfigError,
    DataError,
    RecordTooShortError,
)
from seizure.features.lfcc import FeatureSequence, extract_features
from seizure.hmm.decoding import epoch_scores
from seizure.hmm.model import GmmHmm, load_model, save_model
from seizure.hmm.training import train_channel_models
from seizure.models import AnnotationSet
from seizure.nn.network import Network, build_network, load_network, save_network
from seizure.nn.sda import sda_finetune, sda_pretrain
from seizure.nn.training import fit_network
from seizure.signal.annotations import annotations_to_epoch_labels
from seizure.signal.record import EegRecord
from seizure.signal.synth import derive_seeds
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack
from seizure.storage import load_bundle, save_bundle, verify_manifest, write_manifest

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
TRAINING_FILE = "training.json"
_HMM_KINDS = (SystemKind.HMM_ONLY, SystemKind.HMM_SDA, SystemKind.HMM_LSTM)
_INFER_BATCH = 64


@dataclass
class TrainedSystem:
    config: SystemConfig
    channel_labels: tuple[str, ...]
    seiz_model: GmmHmm | None = None
    bckg_model: GmmHmm | None = None
    reduction: PcaModel | None = None
    scaler: AffineScaler | None = None
    network: Network | None = None
    loss_trace: list[float] = field(default_factory=list)
    pretrain_traces: list[list[float]] = field(default_factory=list)
    class_counts: dict[str, int] = field(default_factory=dict)

    @property
    def kind(self) -> SystemKind:
        return self.config.kind


# --- Per-record inputs ---


def _check_channels(record: EegRecord, labels: tuple[str, ...]) -> EegRecord:
    if record.channel_labels == labels:
        return record
    if sorted(record.channel_labels) != sorted(labels):
        raise ChannelMismatchError(
            f"record channels {list(record.channel_labels)} do not match the system's {list(labels)}"
        )
    position = {name: i for i, name in enumerate(record.channel_labels)}
    return record.select_channels([position[name] for name in labels])


def _aligned_labels(feats: FeatureSequence, ann: AnnotationSet) -> EpochLabelTrack:
    labels = annotations_to_epoch_labels(ann)
    if len(labels) != feats.num_epochs:
        raise AlignmentError(
            f"annotation covers {len(labels)} epochs but the record holds {feats.num_epochs}"
        )
    return labels


def _hmm_units(system: TrainedSystem, feats: FeatureSequence) -> np.ndarray:
    return epoch_scores(system.seiz_model, system.bckg_model, feats).flattened


def _frame_units(cfg: SystemConfig, feats: FeatureSequence, scaler: AffineScaler) -> np.ndarray:
    frames = scaler(feats.values)
    if cfg.kind is SystemKind.CNN_LSTM:
        frames = frames.transpose(0, 2, 1)[..., None]
    return frames


def _ipca_units(cfg: SystemConfig, vectors: np.ndarray, reduction: PcaModel) -> np.ndarray:
    """Project the centered multi-epoch window of every epoch onto the incremental basis."""
    n = vectors.shape[0]
    out = []
    for start in range(0, n, _INFER_BATCH):
        centers = np.arange(start, min(start + _INFER_BATCH, n))
        windows = vectors[window_indices(n, centers, cfg.resolved_window_s)]
        out.append(pca_transform(reduction, windows.reshape(windows.shape[0], -1)))
    return np.concatenate(out)


def _two_way_posterior(outputs: np.ndarray) -> np.ndarray:
    seiz, bckg = outputs[:, 0], outputs[:, 1]
    total = seiz + bckg
    with np.errstate(invalid="ignore", divide="ignore"):
        posterior = np.where(total > 0, seiz / np.where(total > 0, total, 1.0), 0.5)
    return np.clip(posterior, 0.0, 1.0)


# --- Training ---


def _sampled_rows(units: list[np.ndarray], index: np.ndarray, width: int | None, upe: int = 1) -> np.ndarray:
    source = WindowSource(units, index, np.zeros((index.shape[0], 2)), width, upe)
    return np.concatenate(
        [source.inputs(np.arange(s, min(s + 256, len(source)))) for s in range(0, len(source), 256)]
    )


def _train_network(
    cfg: SystemConfig, source: WindowSource, input_shape: tuple[int, ...], seed: int, num_channels: int
) -> tuple[Network, list[float]]:
    declared_shape, specs = network_layout(cfg, num_channels)
    if tuple(input_shape) != tuple(declared_shape):
        raise ConfigError(f"training inputs {input_shape} differ from the declared network input {declared_shape}")
    network = build_network(specs, declared_shape, seed)
    trace = fit_network(
        network,
        source,
        cfg.resolved_loss,
        cfg.optimizer,
        cfg.epochs,
        cfg.batch_size,
        seed,
        clip_norm=cfg.grad_clip_norm,
    )
    return network, trace


def train_system(cfg: SystemConfig, corpus: list[tuple[EegRecord, AnnotationSet]]) -> TrainedSystem:
    """Train every stage in pipeline order on a labeled corpus."""
    if not corpus:
        raise DataError("training corpus is empty")
    channel_labels = corpus[0][0].channel_labels
    build_system(cfg, len(channel_labels))
    hmm_seed, sample_seed, reduce_seed, net_seed = derive_seeds(cfg.seed, 4)

    records = [_check_channels(record, channel_labels) for record, _ in corpus]
    features = [extract_features(record, cfg.features) for record in records]
    labels = [_aligned_labels(feats, ann) for feats, (_, ann) in zip(features, corpus)]
    index = balanced_epoch_sample(labels, cfg.balance_ratio, sample_seed, cfg.max_train_examples)
    targets = one_hot_targets(np.array([labels[r].is_seizure[e] for r, e in index]))
    n_seiz = int(targets[:, 0].sum())
    logger.info(
        "Training %s on %d records: %d seiz / %d bckg sampled epochs",
        cfg.kind.value, len(records), n_seiz, targets.shape[0] - n_seiz,
    )
    system = TrainedSystem(
        config=cfg,
        channel_labels=tuple(channel_labels),
        class_counts={"seiz": n_seiz, "bckg": int(targets.shape[0] - n_seiz)},
    )
    kind = cfg.kind
    num_channels = len(channel_labels)

    if kind in _HMM_KINDS:
        hmm_cfg = cfg.hmm.model_copy(update={"balance_ratio": cfg.balance_ratio})
        system.seiz_model, system.bckg_model = train_channel_models(features, labels, hmm_cfg, hmm_seed)
        if kind is SystemKind.HMM_ONLY:
            return system
        scores = [_hmm_units(system, feats) for feats in features]

        if kind is SystemKind.HMM_SDA:
            supervectors = _sampled_rows(scores, index, cfg.supervector_window)
            supervectors = supervectors.reshape(supervectors.shape[0], -1)
            system.reduction = pca_fit(supervectors, cfg.pca_dim)
            reduced = pca_transform(system.reduction, supervectors)
            system.scaler = AffineScaler.minmax(reduced)
            inputs = system.scaler(reduced)
            pretrained = sda_pretrain(
                inputs,
                cfg.sda_layers,
                cfg.sda_corruption,
                cfg.sda_pretrain_lr,
                cfg.sda_pretrain_epochs,
                cfg.sda_pretrain_batch,
                net_seed,
            )
            system.network, system.loss_trace = sda_finetune(
                pretrained,
                inputs,
                targets,
                cfg.sda_finetune_lr,
                cfg.sda_finetune_epochs,
                cfg.sda_finetune_batch,
                net_seed,
            )
            system.pretrain_traces = pretrained.loss_traces
            return system

        # hmm_lstm
        system.reduction = pca_fit(_sampled_rows(scores, index, None), cfg.pca_dim)
        reduced = [pca_transform(system.reduction, s) for s in scores]
        system.scaler = AffineScaler.standard(_sampled_rows(reduced, index, None))
        units = [system.scaler(r) for r in reduced]
        source = WindowSource(units, index, targets, cfg.supervector_window)
        shape = (cfg.supervector_window, cfg.pca_dim)
        system.network, system.loss_trace = _train_network(cfg, source, shape, net_seed, num_channels)
        return system

    if kind is SystemKind.IPCA_LSTM:
        vectors = [epoch_vectors(feats, cfg.ipca_pool_frames) for feats in features]
        system.scaler = AffineScaler.standard(_sampled_rows(vectors, index, None))
        scaled = [system.scaler(v) for v in vectors]
        windows = _sampled_rows(scaled, index, cfg.resolved_window_s)
        windows = windows.reshape(windows.shape[0], -1)
        order = np.random.default_rng(reduce_seed).permutation(windows.shape[0])
        system.reduction = ipca_fit(windows[order], cfg.ipca_dim, cfg.ipca_batch_size)
        units = [_ipca_units(cfg, v, system.reduction) for v in scaled]
        source = WindowSource(units, index, targets, cfg.ipca_sequence_length)
        shape = (cfg.ipca_sequence_length, cfg.ipca_dim)
        system.network, system.loss_trace = _train_network(cfg, source, shape, net_seed, num_channels)
        return system

    # cnn_mlp / cnn_lstm
    per_epoch = cfg.features.frames_per_epoch
    sampled = _sampled_rows([f.values for f in features], index, 1, per_epoch)
    system.scaler = AffineScaler.standard(sampled.reshape(-1, sampled.shape[-1]))
    units = [_frame_units(cfg, feats, system.scaler) for feats in features]
    source = WindowSource(units, index, targets, cfg.resolved_window_s, per_epoch)
    shape = (cfg.resolved_window_s * per_epoch,) + units[0].shape[1:]
    system.network, system.loss_trace = _train_network(cfg, source, shape, net_seed, num_channels)
    return system


# --- Inference ---


def _network_inputs(system: TrainedSystem, feats: FeatureSequence) -> Iterator[np.ndarray]:
    cfg = system.config
    kind = system.kind
    n = feats.num_epochs
    if kind is SystemKind.HMM_SDA:
        scores = _hmm_units(system, feats)
        for batch in record_batches(scores, n, cfg.supervector_window, batch_size=_INFER_BATCH):
            reduced = pca_transform(system.reduction, batch.reshape(batch.shape[0], -1))
            yield system.scaler(reduced)
    elif kind is SystemKind.HMM_LSTM:
        units = system.scaler(pca_transform(system.reduction, _hmm_units(system, feats)))
        yield from record_batches(units, n, cfg.supervector_window, batch_size=_INFER_BATCH)
    elif kind is SystemKind.IPCA_LSTM:
        vectors = system.scaler(epoch_vectors(feats, cfg.ipca_pool_frames))
        units = _ipca_units(cfg, vectors, system.reduction)
        yield from record_batches(units, n, cfg.ipca_sequence_length, batch_size=_INFER_BATCH)
    else:
        units = _frame_units(cfg, feats, system.scaler)
        yield from record_batches(
            units, n, cfg.resolved_window_s, cfg.features.frames_per_epoch, batch_size=_INFER_BATCH
        )


def infer_system(system: TrainedSystem, record: EegRecord) -> PosteriorTrack:
    """One seizure posterior per whole epoch; windows are centered on the scored epoch."""
    cfg = system.config
    if record.duration_s < cfg.min_duration_s:
        raise RecordTooShortError(
            f"{cfg.kind.value} needs at least {cfg.min_duration_s} s, record lasts {record.duration_s:.2f} s"
        )
    record = _check_channels(record, system.channel_labels)
    feats = extract_features(record, cfg.features)

    if system.kind is SystemKind.HMM_ONLY:
        llr = epoch_scores(system.seiz_model, system.bckg_model, feats).llr
        return PosteriorTrack(expit(llr.mean(axis=1) / cfg.temperature))

    outputs = [system.network.predict(batch) for batch in _network_inputs(system, feats)]
    return PosteriorTrack(_two_way_posterior(np.concatenate(outputs)))


# --- Persistence ---


def save_system(system: TrainedSystem, directory: str | Path) -> Path:
    """Write the config, every stage's model file and a manifest of content hashes."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / CONFIG_FILE).write_text(system.config.model_dump_json(indent=2) + "\n")
    if system.seiz_model is not None:
        save_model(system.seiz_model, root / "hmm_seiz.npz")
        save_model(system.bckg_model, root / "hmm_bckg.npz")
    if system.reduction is not None:
        save_pca(system.reduction, root / "reduction.npz")
    if system.scaler is not None:
        save_bundle(root / "scaler.npz", "affine_scaler", {"mul": system.scaler.mul, "add": system.scaler.add})
    if system.network is not None:
        save_network(system.network, root / "network.npz")
    training = {
        "kind": system.kind.value,
        "channel_labels": list(system.channel_labels),
        "class_counts": system.class_counts,
        "loss_trace": system.loss_trace,
        "pretrain_traces": system.pretrain_traces,
    }
    (root / TRAINING_FILE).write_text(json.dumps(training, indent=2, sort_keys=True) + "\n")
    write_manifest(root)
    logger.info("Saved %s system to %s", system.kind.value, root)
    return root


def load_system(directory: str | Path) -> TrainedSystem:
    root = Path(directory)
    verify_manifest(root)
    try:
        config = SystemConfig.model_validate_json((root / CONFIG_FILE).read_text())
    except ValidationError as e:
        raise ConfigError(f"Invalid system config in {root}: {e}") from e
    training = json.loads((root / TRAINING_FILE).read_text())
    system = TrainedSystem(
        config=config,
        channel_labels=tuple(training["channel_labels"]),
        loss_trace=list(training.get("loss_trace", [])),
        pretrain_traces=list(training.get("pretrain_traces", [])),
        class_counts=dict(training.get("class_counts", {})),
    )
    if config.kind in _HMM_KINDS:
        system.seiz_model = load_model(root / "hmm_seiz.npz")
        system.bckg_model = load_model(root / "hmm_bckg.npz")
    if (root / "reduction.npz").is_file():
        system.reduction = load_pca(root / "reduction.npz")
    if (root / "scaler.npz").is_file():
        arrays, _ = load_bundle(root / "scaler.npz", "affine_scaler")
        system.scaler = AffineScaler(mul=arrays["mul"], add=arrays["add"])
    if config.kind is not SystemKind.HMM_ONLY:
        system.network = load_network(root / "network.npz")
    return system
