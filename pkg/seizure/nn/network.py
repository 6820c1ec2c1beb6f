"""Layer specifications, network assembly with shape-chain validation, persistence and gradients."""

from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path

import numpy as np
import torch
from pydantic import BaseModel, Field, model_validator
from torch import nn

from seizure.errors import ConfigError, DataError, NonFiniteError, ShapeChainError, ShapeError
from seizure.nn import layers
from seizure.nn.layers import DTYPE, ActivationKind, as_tensor
from seizure.nn.losses import LossKind, compute_loss
from seizure.storage import load_bundle, save_bundle

logger = logging.getLogger(__name__)

Shape = tuple[int, ...]


class LayerKind(str, Enum):
    DENSE = "dense"
    CONV2D = "conv2d"
    MAXPOOL2D = "maxpool2d"
    CONV1D = "conv1d"
    MAXPOOL1D = "maxpool1d"
    LSTM = "lstm"
    BILSTM = "bilstm"
    ACTIVATION = "activation"
    DROPOUT = "dropout"
    GAUSSIAN_NOISE = "gaussian_noise"
    FLATTEN = "flatten"


class LayerSpec(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    kind: LayerKind
    name: str | None = None
    units: int | None = Field(default=None, ge=1)
    kernel_size: int = Field(default=3, ge=1)
    pool_size: int = Field(default=2, ge=1)
    hidden_size: int | None = Field(default=None, ge=1)
    return_sequences: bool = False
    activation: ActivationKind | None = None
    rate: float = Field(default=0.0, ge=0.0, lt=1.0)
    std: float = Field(default=0.0, ge=0.0)
    start_axis: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_kind_params(self) -> LayerSpec:
        kind = self.kind
        if kind in (LayerKind.DENSE, LayerKind.CONV2D, LayerKind.CONV1D) and self.units is None:
            raise ValueError(f"{kind.value} layer needs 'units'")
        if kind in (LayerKind.CONV2D, LayerKind.CONV1D) and self.kernel_size % 2 == 0:
            raise ValueError("convolution kernels must have odd size for same padding")
        if kind in (LayerKind.LSTM, LayerKind.BILSTM) and self.hidden_size is None:
            raise ValueError(f"{kind.value} layer needs 'hidden_size'")
        if kind is LayerKind.ACTIVATION and self.activation is None:
            raise ValueError("activation layer needs 'activation'")
        return self

    # Convenience constructors keep architecture definitions short.
    @classmethod
    def dense(cls, units: int, **kw) -> LayerSpec:
        return cls(kind=LayerKind.DENSE, units=units, **kw)

    @classmethod
    def conv2d(cls, units: int, **kw) -> LayerSpec:
        return cls(kind=LayerKind.CONV2D, units=units, **kw)

    @classmethod
    def conv1d(cls, units: int, **kw) -> LayerSpec:
        return cls(kind=LayerKind.CONV1D, units=units, **kw)

    @classmethod
    def maxpool2d(cls, pool_size: int = 2, **kw) -> LayerSpec:
        return cls(kind=LayerKind.MAXPOOL2D, pool_size=pool_size, **kw)

    @classmethod
    def maxpool1d(cls, pool_size: int, **kw) -> LayerSpec:
        return cls(kind=LayerKind.MAXPOOL1D, pool_size=pool_size, **kw)

    @classmethod
    def lstm(cls, hidden_size: int, bidirectional: bool = False, **kw) -> LayerSpec:
        kind = LayerKind.BILSTM if bidirectional else LayerKind.LSTM
        return cls(kind=kind, hidden_size=hidden_size, **kw)

    @classmethod
    def act(cls, activation: ActivationKind | str, **kw) -> LayerSpec:
        return cls(kind=LayerKind.ACTIVATION, activation=ActivationKind(activation), **kw)

    @classmethod
    def dropout(cls, rate: float, **kw) -> LayerSpec:
        return cls(kind=LayerKind.DROPOUT, rate=rate, **kw)

    @classmethod
    def noise(cls, std: float, **kw) -> LayerSpec:
        return cls(kind=LayerKind.GAUSSIAN_NOISE, std=std, **kw)

    @classmethod
    def flatten(cls, start_axis: int = 0, **kw) -> LayerSpec:
        return cls(kind=LayerKind.FLATTEN, start_axis=start_axis, **kw)


def _output_shape(spec: LayerSpec, shape: Shape, stage: str) -> Shape:
    """Declared output shape of one layer; raises ShapeChainError naming the stage."""
    kind = spec.kind

    def need(rank: int, what: str) -> None:
        if len(shape) < rank:
            raise ShapeChainError(stage, f"{kind.value} needs {what}, got {shape}")

    if kind is LayerKind.DENSE:
        need(1, "a feature axis")
        return shape[:-1] + (spec.units,)
    if kind is LayerKind.CONV2D:
        need(3, "(H, W, C) input")
        return shape[:-1] + (spec.units,)
    if kind is LayerKind.MAXPOOL2D:
        need(3, "(H, W, C) input")
        h, w, c = shape[-3:]
        if h < spec.pool_size or w < spec.pool_size:
            raise ShapeChainError(stage, f"pool {spec.pool_size} larger than extent {h}x{w}")
        return shape[:-3] + (h // spec.pool_size, w // spec.pool_size, c)
    if kind is LayerKind.CONV1D:
        need(2, "(T, C) input")
        return shape[:-1] + (spec.units,)
    if kind is LayerKind.MAXPOOL1D:
        need(2, "(T, C) input")
        if shape[-2] < spec.pool_size:
            raise ShapeChainError(stage, f"pool {spec.pool_size} longer than {shape[-2]} steps")
        return shape[:-2] + (shape[-2] // spec.pool_size, shape[-1])
    if kind in (LayerKind.LSTM, LayerKind.BILSTM):
        need(2, "(T, D) input")
        width = spec.hidden_size * (2 if kind is LayerKind.BILSTM else 1)
        return shape[:-1] + (width,) if spec.return_sequences else shape[:-2] + (width,)
    if kind is LayerKind.FLATTEN:
        if spec.start_axis >= len(shape):
            raise ShapeChainError(stage, f"cannot flatten from axis {spec.start_axis} of {shape}")
        return shape[: spec.start_axis] + (int(np.prod(shape[spec.start_axis :])),)
    return shape


def _make_module(spec: LayerSpec, shape: Shape, generator: torch.Generator, seed: int) -> nn.Module:
    kind = spec.kind
    if kind is LayerKind.DENSE:
        return layers.Dense(shape[-1], spec.units, generator)
    if kind is LayerKind.CONV2D:
        return layers.Conv2d(shape[-1], spec.units, spec.kernel_size, generator)
    if kind is LayerKind.MAXPOOL2D:
        return layers.MaxPool2d(spec.pool_size)
    if kind is LayerKind.CONV1D:
        return layers.Conv1d(shape[-1], spec.units, spec.kernel_size, generator)
    if kind is LayerKind.MAXPOOL1D:
        return layers.MaxPool1d(spec.pool_size)
    if kind in (LayerKind.LSTM, LayerKind.BILSTM):
        return layers.Lstm(shape[-1], spec.hidden_size, kind is LayerKind.BILSTM, spec.return_sequences, generator)
    if kind is LayerKind.ACTIVATION:
        return layers.Activation(spec.activation)
    if kind is LayerKind.DROPOUT:
        return layers.Dropout(spec.rate, seed)
    if kind is LayerKind.GAUSSIAN_NOISE:
        return layers.GaussianNoise(spec.std, seed)
    return layers.Flatten(spec.start_axis)


class Network(nn.Module):
    """Sequential stack of named layers over (batch, *input_shape) tensors."""

    def __init__(self, specs: list[LayerSpec], input_shape: Shape, seed: int) -> None:
        super().__init__()
        self.specs = list(specs)
        self.input_shape = tuple(int(v) for v in input_shape)
        self.seed = int(seed)
        self.shapes = validate_specs(self.specs, self.input_shape)
        self.names = [name for name, _, _ in self.shapes]

        generator = torch.Generator().manual_seed(self.seed)
        self.layers = nn.ModuleList(
            _make_module(spec, in_shape, generator, self.seed + 7919 * (i + 1))
            for i, (spec, (_, in_shape, _)) in enumerate(zip(self.specs, self.shapes))
        )
        self.output_shape = self.shapes[-1][2]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = as_tensor(x)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"network expects (batch, {self.input_shape}), got {tuple(x.shape)}")
        for name, layer in zip(self.names, self.layers):
            x = layer(x)
            if not torch.isfinite(x).all():
                raise NonFiniteError(name)
        return x

    def reseed(self, seed: int) -> None:
        """Reset every stochastic layer's generator (dropout masks, noise draws)."""
        for i, layer in enumerate(self.layers):
            if isinstance(layer, layers._Stochastic):
                layer.reseed(int(seed) + 7919 * (i + 1))

    def recurrent_parameters(self) -> list[nn.Parameter]:
        return [p for layer in self.layers if isinstance(layer, layers.Lstm) for p in layer.parameters()]

    def named_layer_parameters(self) -> dict[str, nn.Parameter]:
        """Parameters keyed as '<layer name>.<parameter>'."""
        result = {}
        for name, layer in zip(self.names, self.layers):
            for pname, param in layer.named_parameters():
                result[f"{name}.{pname}"] = param
        return result

    def predict(self, x: np.ndarray | torch.Tensor, batch_size: int = 256) -> np.ndarray:
        self.eval()
        x = as_tensor(x)
        outputs = []
        with torch.no_grad():
            for start in range(0, x.shape[0], batch_size):
                outputs.append(self(x[start : start + batch_size]))
        return torch.cat(outputs).numpy() if outputs else np.zeros((0,) + self.output_shape)


def build_network(specs: list[LayerSpec], input_shape: Shape, seed: int) -> Network:
    network = Network(specs, input_shape, seed)
    logger.debug("Built network %s -> %s (%d layers)", network.input_shape, network.output_shape, len(specs))
    return network


def network_summary(network: Network) -> str:
    """Text listing of per-layer shapes and parameter counts."""
    lines = [f"input {network.input_shape}"]
    params = network.named_layer_parameters()
    for name, in_shape, out_shape in network.shapes:
        count = sum(p.numel() for key, p in params.items() if key.startswith(f"{name}."))
        lines.append(f"{name:<18} {str(in_shape):<20} -> {str(out_shape):<20} params={count}")
    total = sum(p.numel() for p in network.parameters())
    lines.append(f"output {network.output_shape} total_params={total}")
    return "\n".join(lines)


def save_network(network: Network, path: str | Path) -> None:
    arrays = {key: p.detach().numpy() for key, p in network.named_layer_parameters().items()}
    meta = {
        "input_shape": list(network.input_shape),
        "seed": network.seed,
        "specs": [json.loads(spec.model_dump_json()) for spec in network.specs],
    }
    save_bundle(path, "network", arrays, meta)


def load_network(path: str | Path) -> Network:
    arrays, meta = load_bundle(path, "network")
    specs = [LayerSpec.model_validate(item) for item in meta["specs"]]
    network = Network(specs, tuple(meta["input_shape"]), meta["seed"])
    params = network.named_layer_parameters()
    if set(params) != set(arrays):
        raise DataError(f"Network file {path} parameters do not match its layer description")
    with torch.no_grad():
        for key, param in params.items():
            if tuple(arrays[key].shape) != tuple(param.shape):
                raise DataError(f"Network file {path}: parameter {key} has shape {arrays[key].shape}")
            param.copy_(torch.as_tensor(arrays[key], dtype=DTYPE))
    return network


def backward(
    network: Network, x, target, loss_kind: LossKind | str, seed: int | None = None
) -> dict[str, torch.Tensor]:
    """Reverse-mode gradients of the loss for every parameter, keyed like named_layer_parameters."""
    if seed is not None:
        network.reseed(seed)
    network.zero_grad(set_to_none=True)
    loss = compute_loss(loss_kind, network(x), as_tensor(target))
    loss.backward()
    grads = {}
    for key, param in network.named_layer_parameters().items():
        grad = param.grad if param.grad is not None else torch.zeros_like(param)
        if not torch.isfinite(grad).all():
            raise NonFiniteError(key.split(".", 1)[0], "non-finite gradient")
        grads[key] = grad.detach().clone()
    return grads


def gradient_check(
    network: Network,
    x,
    target,
    loss_kind: LossKind | str,
    eps: float = 1e-5,
    entries_per_param: int = 6,
    seed: int = 0,
) -> float:
    """Largest relative error between autograd and central differences over sampled entries.

    Stochastic layers are reseeded before every evaluation so each pass sees the
    same masks and noise.
    """
    x, target = as_tensor(x), as_tensor(target)
    analytic = backward(network, x, target, loss_kind, seed=seed)
    rng = np.random.default_rng(seed)
    params = network.named_layer_parameters()

    def loss_value() -> float:
        network.reseed(seed)
        with torch.no_grad():
            return float(compute_loss(loss_kind, network(x), target))

    worst = 0.0
    for key, param in params.items():
        flat = param.data.view(-1)
        picks = rng.choice(flat.numel(), size=min(entries_per_param, flat.numel()), replace=False)
        numeric = np.empty(len(picks))
        for j, idx in enumerate(picks):
            original = float(flat[idx])
            flat[idx] = original + eps
            plus = loss_value()
            flat[idx] = original - eps
            minus = loss_value()
            flat[idx] = original
            numeric[j] = (plus - minus) / (2.0 * eps)
        exact = analytic[key].view(-1).numpy()[picks]
        denom = np.linalg.norm(exact) + np.linalg.norm(numeric)
        error = 0.0 if denom == 0.0 else float(np.linalg.norm(exact - numeric) / denom)
        worst = max(worst, error)
        if error > 1e-4:
            logger.debug("Gradient mismatch in %s: relative error %.3e", key, error)
    return worst


def validate_specs(specs: list[LayerSpec], input_shape: Shape) -> list[tuple[str, Shape, Shape]]:
    """Declared shape chain without allocating parameters."""
    if not specs:
        raise ConfigError("network has no layers")
    chain = []
    shape = tuple(input_shape)
    counts: dict[str, int] = {}
    for spec in specs:
        counts[spec.kind.value] = counts.get(spec.kind.value, 0) + 1
        name = spec.name or f"{spec.kind.value}_{counts[spec.kind.value]}"
        out = _output_shape(spec, shape, name)
        chain.append((name, shape, out))
        shape = out
    return chain
