from __future__ import annotations

from enum import Enum

import numpy as np
import torch

from seizure.errors import ConfigError, ShapeError
from seizure.nn.layers import as_tensor

PROB_CLIP = 1e-7


class LossKind(str, Enum):
    CROSS_ENTROPY = "cross_entropy"
    MSE = "mse"


def cross_entropy(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Elementwise binary cross-entropy, predictions clipped to [1e-7, 1 - 1e-7], averaged."""
    p = prediction.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
    return -(target * torch.log(p) + (1.0 - target) * torch.log1p(-p)).mean()


def mse(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return ((prediction - target) ** 2).mean()


def loss_function(kind: LossKind | str):
    try:
        kind = LossKind(kind)
    except ValueError as e:
        raise ConfigError(f"unknown loss '{kind}'") from e
    return cross_entropy if kind is LossKind.CROSS_ENTROPY else mse


def compute_loss(kind: LossKind | str, prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {tuple(prediction.shape)} and target {tuple(target.shape)} differ")
    return loss_function(kind)(prediction, target)


def loss_eval(kind: LossKind | str, prediction, target) -> tuple[float, np.ndarray]:
    """Scalar loss and its gradient with respect to the prediction."""
    pred = as_tensor(prediction).detach().clone().requires_grad_(True)
    loss = compute_loss(kind, pred, as_tensor(target))
    loss.backward()
    return float(loss.detach()), pred.grad.numpy()
