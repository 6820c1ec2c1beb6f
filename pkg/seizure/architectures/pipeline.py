"""Declarative stage lists for the six systems, their network layouts and shape probes."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from seizure.architectures.config import SystemConfig, SystemKind
from seizure.architectures.windows import centered_window, epoch_vectors
from seizure.dimred.pca import ipca_fit, pca_fit, pca_transform
from seizure.errors import ShapeChainError
from seizure.features.lfcc import extract_features
from seizure.hmm.decoding import epoch_scores
from seizure.hmm.model import GmmHmm
from seizure.models import Label
from seizure.nn.layers import DTYPE
from seizure.nn.network import LayerSpec, build_network, validate_specs
from seizure.nn.sda import sda_classifier_specs
from seizure.signal.record import STANDARD_CHANNELS, EegRecord

logger = logging.getLogger(__name__)

Shape = tuple[int, ...]
NUM_CLASSES = 2


@dataclass(frozen=True)
class Stage:
    name: str
    input_shape: Shape
    output_shape: Shape


@dataclass(frozen=True)
class PipelineDescription:
    kind: SystemKind
    stages: tuple[Stage, ...]

    def shape_chain(self) -> list[tuple[str, Shape, Shape]]:
        return [(s.name, s.input_shape, s.output_shape) for s in self.stages]

    def describe(self) -> str:
        return "\n".join(f"{s.name:<18} {s.input_shape} -> {s.output_shape}" for s in self.stages)


def _conv_block(kernels: int, repeats: int, activation, block: int) -> list[LayerSpec]:
    specs: list[LayerSpec] = []
    for r in range(repeats):
        specs.append(LayerSpec.conv2d(kernels, name=f"conv{block}_{r + 1}"))
        specs.append(LayerSpec.act(activation, name=f"act{block}_{r + 1}"))
    specs.append(LayerSpec.maxpool2d(2, name=f"pool{block}"))
    return specs


def network_layout(cfg: SystemConfig, num_channels: int = 22) -> tuple[Shape, list[LayerSpec]] | None:
    """(input shape, layer specs) of the neural second pass, or None for hmm_only."""
    kind = cfg.kind
    dim = cfg.features.total_dim
    frames_per_epoch = cfg.features.frames_per_epoch
    act = cfg.resolved_activation
    head = [LayerSpec.dense(NUM_CLASSES, name="output_dense"), LayerSpec.act("sigmoid", name="output")]

    if kind is SystemKind.HMM_ONLY:
        return None
    if kind is SystemKind.HMM_SDA:
        return (cfg.pca_dim,), sda_classifier_specs(cfg.sda_layers, NUM_CLASSES)
    if kind is SystemKind.HMM_LSTM:
        return (cfg.supervector_window, cfg.pca_dim), [LayerSpec.lstm(cfg.hmm_lstm_hidden, name="lstm")] + head
    if kind is SystemKind.IPCA_LSTM:
        return (cfg.ipca_sequence_length, cfg.ipca_dim), [LayerSpec.lstm(cfg.ipca_lstm_hidden, name="lstm")] + head

    frames = cfg.resolved_window_s * frames_per_epoch
    k1, k2, k3 = cfg.conv_kernels
    if kind is SystemKind.CNN_MLP:
        specs = (
            _conv_block(k1, 2, act, 1)
            + _conv_block(k2, 2, act, 2)
            + _conv_block(k3, 2, act, 3)
            + [
                LayerSpec.dropout(cfg.conv_dropout, name="conv_dropout"),
                LayerSpec.flatten(0, name="flatten"),
                LayerSpec.dense(cfg.dense_units, name="dense"),
                LayerSpec.act(act, name="dense_act"),
                LayerSpec.dropout(cfg.dense_dropout, name="dense_dropout"),
            ]
            + head
        )
        return (frames, num_channels, dim), specs

    h1, h2 = cfg.bilstm_hidden
    specs = (
        [LayerSpec.noise(cfg.noise_std, name="input_noise")]
        + _conv_block(k1, 1, act, 1)
        + _conv_block(k2, 1, act, 2)
        + _conv_block(k3, 1, act, 3)
        + [
            LayerSpec.flatten(1, name="flatten"),
            LayerSpec.dropout(cfg.conv_dropout, name="conv_dropout"),
            LayerSpec.conv1d(cfg.conv1d_kernels, name="conv1d"),
            LayerSpec.act(act, name="conv1d_act"),
            LayerSpec.maxpool1d(cfg.conv1d_pool, name="pool1d"),
            LayerSpec.lstm(h1, bidirectional=True, return_sequences=True, name="bilstm_1"),
            LayerSpec.lstm(h2, bidirectional=True, name="bilstm_2"),
            LayerSpec.dropout(cfg.dense_dropout, name="dense_dropout"),
        ]
        + head
    )
    return (frames, dim, num_channels, 1), specs


def _epoch_vector_width(cfg: SystemConfig, num_channels: int) -> int:
    per_epoch = 1 if cfg.ipca_pool_frames else cfg.features.frames_per_epoch
    return per_epoch * num_channels * cfg.features.total_dim


def build_system(cfg: SystemConfig, num_channels: int = 22) -> PipelineDescription:
    """Resolve every stage's per-epoch input and output shape; the first broken link raises."""
    f = cfg.features
    rate_block = (num_channels, int(round(f.sample_rate_hz)))
    epoch_feats = (f.frames_per_epoch, num_channels, f.total_dim)
    stages = [Stage("features", rate_block, epoch_feats)]
    kind = cfg.kind
    scores = (2 * num_channels,)

    if kind in (SystemKind.HMM_ONLY, SystemKind.HMM_SDA, SystemKind.HMM_LSTM):
        stages.append(Stage("epoch_scores", epoch_feats, scores))
    if kind is SystemKind.HMM_ONLY:
        stages.append(Stage("posterior", scores, (1,)))
        return PipelineDescription(kind, tuple(stages))

    if kind is SystemKind.HMM_SDA:
        supervector = (scores[0] * cfg.supervector_window,)
        _require(supervector[0] >= cfg.pca_dim, "pca", f"cannot reduce {supervector[0]} dims to {cfg.pca_dim}")
        stages += [
            Stage("supervector", scores, supervector),
            Stage("pca", supervector, (cfg.pca_dim,)),
            Stage("minmax", (cfg.pca_dim,), (cfg.pca_dim,)),
        ]
    elif kind is SystemKind.HMM_LSTM:
        _require(scores[0] >= cfg.pca_dim, "pca", f"cannot reduce {scores[0]} dims to {cfg.pca_dim}")
        stages += [
            Stage("pca", scores, (cfg.pca_dim,)),
            Stage("standardize", (cfg.pca_dim,), (cfg.pca_dim,)),
            Stage("sequence", (cfg.pca_dim,), (cfg.supervector_window, cfg.pca_dim)),
        ]
    elif kind is SystemKind.IPCA_LSTM:
        width = _epoch_vector_width(cfg, num_channels)
        window = (width * cfg.resolved_window_s,)
        _require(window[0] >= cfg.ipca_dim, "ipca", f"cannot reduce {window[0]} dims to {cfg.ipca_dim}")
        stages += [
            Stage("epoch_vector", epoch_feats, (width,)),
            Stage("standardize", (width,), (width,)),
            Stage("window", (width,), window),
            Stage("ipca", window, (cfg.ipca_dim,)),
            Stage("sequence", (cfg.ipca_dim,), (cfg.ipca_sequence_length, cfg.ipca_dim)),
        ]
    else:
        input_shape, _ = network_layout(cfg, num_channels)
        stages += [
            Stage("standardize", epoch_feats, epoch_feats),
            Stage("window", epoch_feats, input_shape),
        ]

    input_shape, specs = network_layout(cfg, num_channels)
    if stages[-1].output_shape != input_shape:
        raise ShapeChainError(
            specs[0].name or specs[0].kind.value,
            f"network expects {input_shape}, previous stage yields {stages[-1].output_shape}",
        )
    stages += [Stage(name, tuple(i), tuple(o)) for name, i, o in validate_specs(specs, input_shape)]
    stages.append(Stage("posterior", (NUM_CLASSES,), (1,)))
    return PipelineDescription(kind, tuple(stages))


def _require(ok: bool, stage: str, detail: str) -> None:
    if not ok:
        raise ShapeChainError(stage, detail)


def _probe_hmm(dim: int, label: Label, rng: np.random.Generator) -> GmmHmm:
    s, m = 3, 2
    transitions = np.eye(s) * 0.5 + np.eye(s, k=1) * 0.5
    transitions[-1, -1] = 1.0
    return GmmHmm(
        label=label,
        transitions=transitions,
        weights=np.full((s, m), 1.0 / m),
        means=rng.standard_normal((s, m, dim)),
        variances=np.ones((s, m, dim)),
        variance_floor=np.full(dim, 1e-3),
    )


def probe_shapes(cfg: SystemConfig, num_channels: int = 22) -> PipelineDescription:
    """Run a small random probe through the real operations and record the shapes observed."""
    rng = np.random.default_rng(cfg.seed)
    f = cfg.features
    rate = int(round(f.sample_rate_hz))
    labels = STANDARD_CHANNELS if num_channels == len(STANDARD_CHANNELS) else tuple(f"CH{i}" for i in range(num_channels))
    record = EegRecord.from_microvolts(labels, rate, rng.standard_normal((num_channels, 3 * rate)) * 20.0)
    feats = extract_features(record, f)
    stages = [Stage("features", (num_channels, rate), tuple(feats.values[: f.frames_per_epoch].shape))]
    epoch_feats = stages[0].output_shape
    kind = cfg.kind
    n_probe = max(cfg.pca_dim, cfg.ipca_dim) + 8

    if kind in (SystemKind.HMM_ONLY, SystemKind.HMM_SDA, SystemKind.HMM_LSTM):
        grid = epoch_scores(_probe_hmm(f.total_dim, Label.SEIZ, rng), _probe_hmm(f.total_dim, Label.BCKG, rng), feats)
        scores = grid.flattened
        stages.append(Stage("epoch_scores", epoch_feats, tuple(scores.shape[1:])))
    if kind is SystemKind.HMM_ONLY:
        stages.append(Stage("posterior", tuple(scores.shape[1:]), (1,)))
        return PipelineDescription(kind, tuple(stages))

    if kind is SystemKind.HMM_SDA:
        sv = centered_window(scores, 0, cfg.supervector_window).reshape(-1)
        data = rng.standard_normal((n_probe, sv.shape[0]))
        reduced = pca_transform(pca_fit(data, cfg.pca_dim), sv)
        stages += [
            Stage("supervector", tuple(scores.shape[1:]), tuple(sv.shape)),
            Stage("pca", tuple(sv.shape), tuple(reduced.shape)),
            Stage("minmax", tuple(reduced.shape), tuple(reduced.shape)),
        ]
        net_input = reduced
    elif kind is SystemKind.HMM_LSTM:
        data = rng.standard_normal((n_probe, scores.shape[1]))
        reduced = pca_transform(pca_fit(data, cfg.pca_dim), scores)
        seq = centered_window(reduced, 0, cfg.supervector_window)
        stages += [
            Stage("pca", tuple(scores.shape[1:]), tuple(reduced.shape[1:])),
            Stage("standardize", tuple(reduced.shape[1:]), tuple(reduced.shape[1:])),
            Stage("sequence", tuple(reduced.shape[1:]), tuple(seq.shape)),
        ]
        net_input = seq
    elif kind is SystemKind.IPCA_LSTM:
        vectors = epoch_vectors(feats, cfg.ipca_pool_frames)
        window = centered_window(vectors, 0, cfg.resolved_window_s).reshape(-1)
        model = ipca_fit(rng.standard_normal((n_probe, window.shape[0])), cfg.ipca_dim, cfg.ipca_batch_size)
        reduced = pca_transform(model, window[None])
        seq = centered_window(reduced, 0, cfg.ipca_sequence_length)
        stages += [
            Stage("epoch_vector", epoch_feats, tuple(vectors.shape[1:])),
            Stage("standardize", tuple(vectors.shape[1:]), tuple(vectors.shape[1:])),
            Stage("window", tuple(vectors.shape[1:]), tuple(window.shape)),
            Stage("ipca", tuple(window.shape), tuple(reduced.shape[1:])),
            Stage("sequence", tuple(reduced.shape[1:]), tuple(seq.shape)),
        ]
        net_input = seq
    else:
        frames = feats.values
        if kind is SystemKind.CNN_LSTM:
            frames = frames.transpose(0, 2, 1)[..., None]
        window = centered_window(frames, 0, cfg.resolved_window_s, f.frames_per_epoch)
        stages += [
            Stage("standardize", epoch_feats, epoch_feats),
            Stage("window", epoch_feats, tuple(window.shape)),
        ]
        net_input = window

    input_shape, specs = network_layout(cfg, num_channels)
    network = build_network(specs, tuple(net_input.shape), cfg.seed)
    network.eval()
    x = torch.as_tensor(np.asarray(net_input, dtype=np.float64)[None], dtype=DTYPE)
    with torch.no_grad():
        for name, layer in zip(network.names, network.layers):
            y = layer(x)
            stages.append(Stage(name, tuple(x.shape[1:]), tuple(y.shape[1:])))
            x = y
    stages.append(Stage("posterior", tuple(x.shape[1:]), (1,)))
    return PipelineDescription(kind, tuple(stages))
