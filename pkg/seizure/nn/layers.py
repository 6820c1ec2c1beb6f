"""Channel-last neural layer operations (torch, float64) and the modules built on them.

Arrays follow the (..., H, W, C) / (..., T, C) layout used by the feature images;
torch's channel-first kernels are reached by permuting at the boundary.
"""

from __future__ import annotations

import logging
from enum import Enum

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from seizure.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

DTYPE = torch.float64


class ActivationKind(str, Enum):
    LINEAR = "linear"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    SOFTSIGN = "softsign"
    RELU = "relu"
    ELU = "elu"


def as_tensor(x: np.ndarray | torch.Tensor) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x if x.dtype == DTYPE else x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


# --- Functional operations ---

def dense_forward(x, weights, bias) -> torch.Tensor:
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    if x.shape[-1] != weights.shape[0] or bias.shape != weights.shape[1:]:
        raise ShapeError(f"dense: input {tuple(x.shape)} incompatible with weights {tuple(weights.shape)}")
    return x @ weights + bias


def _fold(x: torch.Tensor, trailing: int) -> tuple[torch.Tensor, tuple[int, ...]]:
    lead = tuple(x.shape[:-trailing])
    return x.reshape((-1,) + tuple(x.shape[-trailing:])), lead


def conv2d_forward(x, kernels, bias=None) -> torch.Tensor:
    """Same-padded stride-1 cross-correlation on (..., H, W, Cin) with (k, k, Cin, K) kernels."""
    x, kernels = as_tensor(x), as_tensor(kernels)
    if x.ndim < 3:
        raise ShapeError(f"conv2d expects (..., H, W, C) input, got {tuple(x.shape)}")
    kh, kw, cin, k = kernels.shape
    if x.shape[-1] != cin:
        raise ShapeError(f"conv2d: input has {x.shape[-1]} channels, kernels expect {cin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernels must have odd extents, got {kh}x{kw}")
    flat, lead = _fold(x, 3)
    out = F.conv2d(
        flat.permute(0, 3, 1, 2),
        kernels.permute(3, 2, 0, 1),
        None if bias is None else as_tensor(bias),
        padding=(kh // 2, kw // 2),
    )
    out = out.permute(0, 2, 3, 1)
    return out.reshape(lead + tuple(out.shape[1:]))


def maxpool2d(x, pool: int = 2) -> torch.Tensor:
    """Non-overlapping max pooling; odd trailing rows/columns are dropped."""
    x = as_tensor(x)
    if x.ndim < 3 or x.shape[-3] < pool or x.shape[-2] < pool:
        raise ShapeError(f"maxpool2d({pool}) needs spatial extents >= {pool}, got {tuple(x.shape)}")
    flat, lead = _fold(x, 3)
    out = F.max_pool2d(flat.permute(0, 3, 1, 2), kernel_size=pool, stride=pool).permute(0, 2, 3, 1)
    return out.reshape(lead + tuple(out.shape[1:]))


def conv1d_forward(x, kernels, bias=None) -> torch.Tensor:
    """Same-padded convolution along time on (..., T, Cin) with (k, Cin, K) kernels."""
    x, kernels = as_tensor(x), as_tensor(kernels)
    if x.ndim < 2:
        raise ShapeError(f"conv1d expects (..., T, C) input, got {tuple(x.shape)}")
    width, cin, k = kernels.shape
    if x.shape[-1] != cin:
        raise ShapeError(f"conv1d: input has {x.shape[-1]} channels, kernels expect {cin}")
    flat, lead = _fold(x, 2)
    out = F.conv1d(
        flat.permute(0, 2, 1),
        kernels.permute(2, 1, 0),
        None if bias is None else as_tensor(bias),
        padding=width // 2,
    ).permute(0, 2, 1)
    return out.reshape(lead + tuple(out.shape[1:]))


def maxpool1d(x, size: int = 8) -> torch.Tensor:
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-2] < size:
        raise ShapeError(f"maxpool1d({size}) needs at least {size} time steps, got {tuple(x.shape)}")
    flat, lead = _fold(x, 2)
    out = F.max_pool1d(flat.permute(0, 2, 1), kernel_size=size, stride=size).permute(0, 2, 1)
    return out.reshape(lead + tuple(out.shape[1:]))


def lstm_forward(
    x,
    params: dict[str, torch.Tensor | np.ndarray],
    bidirectional: bool = False,
    return_sequences: bool = True,
) -> torch.Tensor:
    """Run an LSTM with explicit parameters in torch's layout (gate order i, f, g, o).

    `params` holds weight_ih_l0, weight_hh_l0, bias_ih_l0, bias_hh_l0 and, when
    bidirectional, the same names with a `_reverse` suffix. Input is (T, D) or
    (N, T, D); the output is (.., T, H*dirs) or the final hidden state (.., H*dirs).
    """
    x = as_tensor(x)
    params = {name: as_tensor(value) for name, value in params.items()}
    suffixes = ["", "_reverse"] if bidirectional else [""]
    expected = {f"{kind}_l0{s}" for s in suffixes for kind in ("weight_ih", "weight_hh", "bias_ih", "bias_hh")}
    if set(params) != expected:
        raise ShapeError(f"lstm parameters {sorted(params)} do not match {sorted(expected)}")
    if x.ndim not in (2, 3) or x.shape[-1] != params["weight_ih_l0"].shape[1]:
        raise ShapeError(f"lstm: input {tuple(x.shape)} does not match weights {tuple(params['weight_ih_l0'].shape)}")

    unbatched = x.ndim == 2
    batch = x[None] if unbatched else x
    sequences, finals = [], []
    for suffix in suffixes:
        seq, final = _lstm_direction(
            batch,
            params[f"weight_ih_l0{suffix}"],
            params[f"weight_hh_l0{suffix}"],
            params[f"bias_ih_l0{suffix}"],
            params[f"bias_hh_l0{suffix}"],
            reverse=bool(suffix),
        )
        sequences.append(seq)
        finals.append(final)
    out = torch.cat(sequences, dim=-1) if return_sequences else torch.cat(finals, dim=-1)
    return out[0] if unbatched else out


def _lstm_direction(
    x: torch.Tensor,
    w_ih: torch.Tensor,
    w_hh: torch.Tensor,
    b_ih: torch.Tensor,
    b_hh: torch.Tensor,
    reverse: bool,
) -> tuple[torch.Tensor, torch.Tensor]:
    n, t_len, _ = x.shape
    hidden = w_hh.shape[1]
    h = x.new_zeros(n, hidden)
    c = x.new_zeros(n, hidden)
    projected = x @ w_ih.T + b_ih
    outputs: list[torch.Tensor | None] = [None] * t_len
    for t in (range(t_len - 1, -1, -1) if reverse else range(t_len)):
        gates = projected[:, t] + h @ w_hh.T + b_hh
        i, f, g, o = gates.chunk(4, dim=1)
        c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
        h = torch.sigmoid(o) * torch.tanh(c)
        outputs[t] = h
    return torch.stack(outputs, dim=1), h


def activation_apply(kind: ActivationKind | str, x) -> torch.Tensor:
    x = as_tensor(x)
    try:
        kind = ActivationKind(kind)
    except ValueError as e:
        raise ConfigError(f"unknown activation '{kind}'") from e
    if kind is ActivationKind.LINEAR:
        return x
    if kind is ActivationKind.TANH:
        return torch.tanh(x)
    if kind is ActivationKind.SIGMOID:
        return torch.sigmoid(x)
    if kind is ActivationKind.SOFTSIGN:
        return F.softsign(x)
    if kind is ActivationKind.RELU:
        return F.relu(x)
    return F.elu(x, alpha=1.0)


def regularize(
    kind: str,
    x,
    training: bool,
    seed: int | torch.Generator,
    rate: float = 0.0,
    std: float = 0.0,
) -> torch.Tensor:
    """Dropout (inverted scaling) or additive Gaussian noise; identity outside training."""
    x = as_tensor(x)
    if kind == "dropout":
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    elif kind == "gaussian_noise":
        if std < 0:
            raise ConfigError(f"noise std must be non-negative, got {std}")
    else:
        raise ConfigError(f"unknown regularizer '{kind}'")
    if not training:
        return x

    generator = seed if isinstance(seed, torch.Generator) else torch.Generator().manual_seed(int(seed))
    if kind == "dropout":
        if rate == 0.0:
            return x
        keep = torch.rand(x.shape, generator=generator, dtype=DTYPE) >= rate
        return x * keep / (1.0 - rate)
    if std == 0.0:
        return x
    return x + std * torch.randn(x.shape, generator=generator, dtype=DTYPE)


# --- Modules ---

def _uniform(shape: tuple[int, ...], bound: float, generator: torch.Generator) -> nn.Parameter:
    values = (torch.rand(shape, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound
    return nn.Parameter(values)


class Dense(nn.Module):
    def __init__(self, in_features: int, units: int, generator: torch.Generator) -> None:
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = _uniform((in_features, units), bound, generator)
        self.bias = _uniform((units,), bound, generator)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return dense_forward(x, self.weight, self.bias)


class Conv2d(nn.Module):
    def __init__(self, in_channels: int, kernels: int, kernel_size: int, generator: torch.Generator) -> None:
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel_size * kernel_size)
        self.kernels = _uniform((kernel_size, kernel_size, in_channels, kernels), bound, generator)
        self.bias = _uniform((kernels,), bound, generator)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return conv2d_forward(x, self.kernels, self.bias)


class Conv1d(nn.Module):
    def __init__(self, in_channels: int, kernels: int, kernel_size: int, generator: torch.Generator) -> None:
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.kernels = _uniform((kernel_size, in_channels, kernels), bound, generator)
        self.bias = _uniform((kernels,), bound, generator)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return conv1d_forward(x, self.kernels, self.bias)


class MaxPool2d(nn.Module):
    def __init__(self, pool: int) -> None:
        super().__init__()
        self.pool = pool

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return maxpool2d(x, self.pool)


class MaxPool1d(nn.Module):
    def __init__(self, size: int) -> None:
        super().__init__()
        self.size = size

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return maxpool1d(x, self.size)


class Lstm(nn.Module):
    """Uni- or bidirectional LSTM over (..., T, D); forget-gate input bias starts at 1."""

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        bidirectional: bool,
        return_sequences: bool,
        generator: torch.Generator,
    ) -> None:
        super().__init__()
        self.return_sequences = return_sequences
        self.lstm = nn.LSTM(input_size, hidden_size, batch_first=True, bidirectional=bidirectional, dtype=DTYPE)
        bound = 1.0 / np.sqrt(hidden_size)
        with torch.no_grad():
            for name, param in self.lstm.named_parameters():
                if name.startswith("weight"):
                    param.copy_((torch.rand(param.shape, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound)
                else:
                    param.zero_()
                    if name.startswith("bias_ih"):
                        param[hidden_size : 2 * hidden_size] = 1.0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        flat, lead = _fold(x, 2)
        sequence, (h_n, _) = self.lstm(flat)
        out = sequence if self.return_sequences else torch.cat(list(h_n), dim=-1)
        return out.reshape(lead + tuple(out.shape[1:]))


class Activation(nn.Module):
    def __init__(self, kind: ActivationKind) -> None:
        super().__init__()
        self.kind = ActivationKind(kind)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return activation_apply(self.kind, x)


class _Stochastic(nn.Module):
    def __init__(self, seed: int) -> None:
        super().__init__()
        self.generator = torch.Generator().manual_seed(seed)

    def reseed(self, seed: int) -> None:
        self.generator.manual_seed(seed)


class Dropout(_Stochastic):
    def __init__(self, rate: float, seed: int) -> None:
        super().__init__(seed)
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return regularize("dropout", x, self.training, self.generator, rate=self.rate)


class GaussianNoise(_Stochastic):
    def __init__(self, std: float, seed: int) -> None:
        super().__init__(seed)
        self.std = std

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return regularize("gaussian_noise", x, self.training, self.generator, std=self.std)


class Flatten(nn.Module):
    """Flatten example axes from `start_axis` on (batch axis excluded)."""

    def __init__(self, start_axis: int) -> None:
        super().__init__()
        self.start_axis = start_axis

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x.flatten(start_dim=1 + self.start_axis)
