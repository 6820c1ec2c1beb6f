"""Minibatch training loop shared by every neural second pass."""

from __future__ import annotations

import logging
from typing import Protocol

import numpy as np
import torch

from seizure.config import settings
from seizure.errors import DataError, NumericError
from seizure.nn.layers import as_tensor
from seizure.nn.losses import LossKind, compute_loss
from seizure.nn.network import Network
from seizure.nn.optim import OptimizerConfig, make_optimizer

logger = logging.getLogger(__name__)


class ExampleSource(Protocol):
    """Lazily materialized training examples (inputs, targets) indexed by position."""

    def __len__(self) -> int: ...

    def take(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class ArraySource:
    def __init__(self, x, y) -> None:
        self.x = as_tensor(x)
        self.y = as_tensor(y)
        if self.x.shape[0] != self.y.shape[0]:
            raise DataError(f"{self.x.shape[0]} inputs for {self.y.shape[0]} targets")

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def take(self, indices: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
        idx = torch.as_tensor(indices, dtype=torch.long)
        return self.x[idx], self.y[idx]


def fit_network(
    network: Network,
    data: ExampleSource | tuple,
    loss_kind: LossKind | str,
    optimizer: OptimizerConfig,
    epochs: int,
    batch_size: int,
    seed: int,
    clip_norm: float | None = None,
) -> list[float]:
    """Train in place; returns the mean training loss of every epoch."""
    source = ArraySource(*data) if isinstance(data, tuple) else data
    n = len(source)
    if n == 0:
        raise DataError("no training examples")
    clip_norm = settings.grad_clip_norm if clip_norm is None else clip_norm
    state = make_optimizer(network.parameters(), optimizer)
    recurrent = network.recurrent_parameters()
    generator = torch.Generator().manual_seed(int(seed))
    network.reseed(seed)
    network.train()

    trace: list[float] = []
    for epoch in range(epochs):
        order = torch.randperm(n, generator=generator).numpy()
        total, seen = 0.0, 0
        for start in range(0, n, batch_size):
            xb, yb = source.take(order[start : start + batch_size])
            xb, yb = as_tensor(xb), as_tensor(yb)
            state.optimizer.zero_grad(set_to_none=True)
            loss = compute_loss(loss_kind, network(xb), yb)
            if not torch.isfinite(loss):
                raise NumericError(f"training loss became non-finite at epoch {epoch}")
            loss.backward()
            if recurrent and clip_norm:
                torch.nn.utils.clip_grad_norm_(recurrent, clip_norm)
            state.optimizer.step()
            state.scheduler.step()
            state.step += 1
            total += float(loss.detach()) * xb.shape[0]
            seen += xb.shape[0]
        trace.append(total / seen)
        logger.info("epoch %d/%d loss=%.6f lr=%.6g", epoch + 1, epochs, trace[-1], state.learning_rate)
    network.eval()
    return trace
