"""Stacked denoising autoencoders: greedy layer-wise pretraining and logistic fine-tuning."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from seizure.errors import DataError, ShapeError
from seizure.nn.layers import DTYPE, as_tensor
from seizure.nn.losses import LossKind, cross_entropy
from seizure.nn.network import LayerSpec, Network, build_network
from seizure.nn.optim import OptimizerConfig, OptimizerKind
from seizure.nn.training import fit_network

logger = logging.getLogger(__name__)

SDA_LAYER_SIZES = (800, 500, 300)


@dataclass
class PretrainResult:
    """Encoder (weights, bias) per layer, plus the per-epoch reconstruction loss of each layer."""

    encoders: list[tuple[np.ndarray, np.ndarray]]
    loss_traces: list[list[float]] = field(default_factory=list)


class _TiedAutoencoder(nn.Module):
    def __init__(self, n_visible: int, n_hidden: int, generator: torch.Generator) -> None:
        super().__init__()
        bound = 4.0 * np.sqrt(6.0 / (n_visible + n_hidden))
        self.weight = nn.Parameter((torch.rand((n_visible, n_hidden), generator=generator, dtype=DTYPE) * 2 - 1) * bound)
        self.hidden_bias = nn.Parameter(torch.zeros(n_hidden, dtype=DTYPE))
        self.visible_bias = nn.Parameter(torch.zeros(n_visible, dtype=DTYPE))

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(x @ self.weight + self.hidden_bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.encode(x) @ self.weight.T + self.visible_bias)


def sda_pretrain(
    data,
    layer_sizes: tuple[int, ...] = SDA_LAYER_SIZES,
    corruption: float = 0.3,
    learning_rate: float = 0.5,
    epochs: int = 150,
    batch_size: int = 300,
    seed: int = 0,
) -> PretrainResult:
    """Greedy layer-wise training; each layer reconstructs its zero-masked input with cross-entropy.

    Inputs are expected in [0, 1] (min-max scaled).
    """
    x = as_tensor(data)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError(f"SdA pretraining needs a non-empty samples x features matrix, got {tuple(x.shape)}")
    generator = torch.Generator().manual_seed(int(seed))
    result = PretrainResult(encoders=[])
    current = x
    for depth, n_hidden in enumerate(layer_sizes):
        ae = _TiedAutoencoder(current.shape[1], n_hidden, generator)
        optimizer = torch.optim.SGD(ae.parameters(), lr=learning_rate)
        n = current.shape[0]
        trace = []
        for _ in range(epochs):
            order = torch.randperm(n, generator=generator)
            total = 0.0
            for start in range(0, n, batch_size):
                clean = current[order[start : start + batch_size]]
                keep = torch.rand(clean.shape, generator=generator, dtype=DTYPE) >= corruption
                optimizer.zero_grad(set_to_none=True)
                loss = cross_entropy(ae(clean * keep), clean.clamp(0.0, 1.0))
                loss.backward()
                optimizer.step()
                total += float(loss.detach()) * clean.shape[0]
            trace.append(total / n)
        logger.info("SdA layer %d (%d units): reconstruction %.4f -> %.4f", depth + 1, n_hidden, trace[0] if trace else float("nan"), trace[-1] if trace else float("nan"))
        result.encoders.append((ae.weight.detach().numpy().copy(), ae.hidden_bias.detach().numpy().copy()))
        result.loss_traces.append(trace)
        with torch.no_grad():
            current = ae.encode(current)
    return result


def sda_classifier_specs(layer_sizes: tuple[int, ...] = SDA_LAYER_SIZES, outputs: int = 2) -> list[LayerSpec]:
    specs: list[LayerSpec] = []
    for i, units in enumerate(layer_sizes):
        specs += [LayerSpec.dense(units, name=f"encoder_{i + 1}"), LayerSpec.act("sigmoid", name=f"sigmoid_{i + 1}")]
    specs += [LayerSpec.dense(outputs, name="logistic"), LayerSpec.act("sigmoid", name="output")]
    return specs


def sda_finetune(
    pretrained: PretrainResult,
    data,
    labels,
    learning_rate: float = 0.1,
    epochs: int = 300,
    batch_size: int = 100,
    seed: int = 0,
) -> tuple[Network, list[float]]:
    """Stack the encoders under a logistic output layer and train the whole classifier with SGD.

    `labels` are (n, 2) targets ordered (seiz, bckg).
    """
    x, y = as_tensor(data), as_tensor(labels)
    if x.shape[0] == 0:
        raise DataError("SdA fine-tuning needs at least one example")
    sizes = tuple(w.shape[1] for w, _ in pretrained.encoders)
    if pretrained.encoders and pretrained.encoders[0][0].shape[0] != x.shape[1]:
        raise ShapeError(f"encoder input {pretrained.encoders[0][0].shape[0]} != data width {x.shape[1]}")
    network = build_network(sda_classifier_specs(sizes, y.shape[1]), (x.shape[1],), seed)
    params = network.named_layer_parameters()
    with torch.no_grad():
        for i, (weight, bias) in enumerate(pretrained.encoders):
            params[f"encoder_{i + 1}.weight"].copy_(torch.as_tensor(weight))
            params[f"encoder_{i + 1}.bias"].copy_(torch.as_tensor(bias))
    trace = fit_network(
        network,
        (x, y),
        LossKind.CROSS_ENTROPY,
        OptimizerConfig(kind=OptimizerKind.SGD, learning_rate=learning_rate),
        epochs,
        batch_size,
        seed,
    )
    return network, trace
