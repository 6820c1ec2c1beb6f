"""The seven optimizers compared in the ablation, with 1/(1 + decay*t) learning-rate decay."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import torch
from pydantic import BaseModel, Field
from torch.optim.lr_scheduler import LambdaLR

from seizure.errors import ShapeError
from seizure.nn.layers import as_tensor

logger = logging.getLogger(__name__)


class OptimizerKind(str, Enum):
    SGD = "sgd"
    RMSPROP = "rmsprop"
    ADAGRAD = "adagrad"
    ADADELTA = "adadelta"
    ADAM = "adam"
    ADAMAX = "adamax"
    NADAM = "nadam"


DEFAULT_LEARNING_RATES = {
    OptimizerKind.SGD: 0.01,
    OptimizerKind.RMSPROP: 0.001,
    OptimizerKind.ADAGRAD: 0.01,
    OptimizerKind.ADADELTA: 1.0,
    OptimizerKind.ADAM: 0.0005,
    OptimizerKind.ADAMAX: 0.002,
    OptimizerKind.NADAM: 0.002,
}


class OptimizerConfig(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    kind: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float | None = Field(default=None, ge=0.0)
    decay: float = Field(default=0.0, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, ge=0.0)
    rho: float | None = Field(default=None, ge=0.0, lt=1.0)
    momentum: float = Field(default=0.0, ge=0.0)

    @property
    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return DEFAULT_LEARNING_RATES[self.kind]


@dataclass
class OptimizerState:
    """Wrapped torch optimizer plus decay schedule; `step` counts applied updates."""

    config: OptimizerConfig
    optimizer: torch.optim.Optimizer
    scheduler: LambdaLR
    step: int = 0

    @property
    def learning_rate(self) -> float:
        return float(self.optimizer.param_groups[0]["lr"])


def make_optimizer(params, cfg: OptimizerConfig) -> OptimizerState:
    params = list(params)
    lr = cfg.resolved_learning_rate
    kind = cfg.kind
    if kind is OptimizerKind.SGD:
        optimizer = torch.optim.SGD(params, lr=lr, momentum=cfg.momentum)
    elif kind is OptimizerKind.RMSPROP:
        optimizer = torch.optim.RMSprop(params, lr=lr, alpha=cfg.rho if cfg.rho is not None else 0.9, eps=cfg.eps)
    elif kind is OptimizerKind.ADAGRAD:
        optimizer = torch.optim.Adagrad(params, lr=lr, eps=max(cfg.eps, 1e-10))
    elif kind is OptimizerKind.ADADELTA:
        optimizer = torch.optim.Adadelta(params, lr=lr, rho=cfg.rho if cfg.rho is not None else 0.95, eps=1e-6)
    elif kind is OptimizerKind.ADAM:
        optimizer = torch.optim.Adam(params, lr=lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
    elif kind is OptimizerKind.ADAMAX:
        optimizer = torch.optim.Adamax(params, lr=lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
    else:
        optimizer = torch.optim.NAdam(params, lr=lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
    decay = cfg.decay
    scheduler = LambdaLR(optimizer, lr_lambda=lambda t: 1.0 / (1.0 + decay * t))
    return OptimizerState(config=cfg, optimizer=optimizer, scheduler=scheduler)


def optimizer_step(state: OptimizerState, params, grads) -> OptimizerState:
    """Apply one update in place using the supplied gradients."""
    params = list(params)
    grads = list(grads)
    if len(params) != len(grads):
        raise ShapeError(f"{len(grads)} gradients for {len(params)} parameters")
    for param, grad in zip(params, grads):
        grad = as_tensor(grad)
        if grad.shape != param.shape:
            raise ShapeError(f"gradient {tuple(grad.shape)} does not match parameter {tuple(param.shape)}")
        param.grad = grad.detach().clone()
    state.optimizer.step()
    state.scheduler.step()
    state.step += 1
    return state
