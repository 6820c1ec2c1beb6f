from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, field_validator, model_validator

from seizure.features.lfcc import FeatureConfig
from seizure.hmm.model import HmmConfig
from seizure.nn.layers import ActivationKind
from seizure.nn.losses import LossKind
from seizure.nn.optim import OptimizerConfig


class SystemKind(str, Enum):
    HMM_ONLY = "hmm_only"
    HMM_SDA = "hmm_sda"
    HMM_LSTM = "hmm_lstm"
    IPCA_LSTM = "ipca_lstm"
    CNN_MLP = "cnn_mlp"
    CNN_LSTM = "cnn_lstm"


# Command-line spelling -> kind
SYSTEM_ALIASES = {"hmm": SystemKind.HMM_ONLY}

_DEFAULT_WINDOW_S = {
    SystemKind.IPCA_LSTM: 7,
    SystemKind.CNN_MLP: 7,
    SystemKind.CNN_LSTM: 21,
}


def parse_system_kind(value: str | SystemKind) -> SystemKind:
    if isinstance(value, SystemKind):
        return value
    return SYSTEM_ALIASES.get(value, None) or SystemKind(value)


class SystemConfig(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    kind: SystemKind = SystemKind.CNN_LSTM
    seed: int = 0

    features: FeatureConfig = Field(default_factory=FeatureConfig)
    hmm: HmmConfig = Field(default_factory=HmmConfig)
    optimizer: OptimizerConfig = Field(default_factory=lambda: OptimizerConfig(decay=1e-4))
    activation: ActivationKind | None = None
    loss: LossKind | None = None

    # Windows
    supervector_window: int = Field(default=41, ge=1)
    window_s: int | None = Field(default=None, ge=1)
    ipca_sequence_length: int = Field(default=7, ge=1)
    ipca_pool_frames: bool = True

    # Reductions
    pca_dim: int = Field(default=20, ge=1)
    ipca_dim: int = Field(default=25, ge=1)
    ipca_batch_size: int = Field(default=50, ge=1)

    # Network sizes
    hmm_lstm_hidden: int = Field(default=32, ge=1)
    ipca_lstm_hidden: int = Field(default=128, ge=1)
    bilstm_hidden: tuple[int, int] = (128, 256)
    conv_kernels: tuple[int, int, int] = (16, 32, 64)
    conv1d_kernels: int = Field(default=16, ge=1)
    conv1d_pool: int = Field(default=8, ge=1)
    dense_units: int = Field(default=512, ge=1)
    sda_layers: tuple[int, ...] = (800, 500, 300)

    # Regularization
    dense_dropout: float = Field(default=0.5, ge=0.0, lt=1.0)
    conv_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    noise_std: float = Field(default=0.1, ge=0.0)

    # Training
    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=64, ge=1)
    balance_ratio: float = Field(default=1.0, gt=0)
    max_train_examples: int = Field(default=20000, ge=2)
    grad_clip_norm: float | None = Field(default=None, gt=0)

    # SdA schedule
    sda_corruption: float = Field(default=0.3, ge=0.0, lt=1.0)
    sda_pretrain_lr: float = Field(default=0.5, gt=0)
    sda_pretrain_epochs: int = Field(default=150, ge=0)
    sda_pretrain_batch: int = Field(default=300, ge=1)
    sda_finetune_lr: float = Field(default=0.1, gt=0)
    sda_finetune_epochs: int = Field(default=300, ge=1)
    sda_finetune_batch: int = Field(default=100, ge=1)

    # hmm_only channel aggregation
    temperature: float = Field(default=10.0, gt=0)

    @field_validator("kind", mode="before")
    @classmethod
    def _resolve_alias(cls, value):
        return parse_system_kind(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check_windows(self) -> SystemConfig:
        if self.supervector_window % 2 == 0:
            raise ValueError("supervector_window must be odd for centered windows")
        if self.ipca_sequence_length % 2 == 0:
            raise ValueError("ipca_sequence_length must be odd for centered sequences")
        if self.window_s is not None and self.window_s % 2 == 0:
            raise ValueError("window_s must be an odd number of seconds")
        return self

    @property
    def resolved_window_s(self) -> int:
        if self.window_s is not None:
            return self.window_s
        return _DEFAULT_WINDOW_S.get(self.kind, 1)

    @property
    def resolved_activation(self) -> ActivationKind:
        if self.activation is not None:
            return self.activation
        return ActivationKind.ELU if self.kind is SystemKind.CNN_LSTM else ActivationKind.RELU

    @property
    def resolved_loss(self) -> LossKind:
        if self.loss is not None:
            return self.loss
        return LossKind.MSE if self.kind is SystemKind.CNN_LSTM else LossKind.CROSS_ENTROPY

    @property
    def min_duration_s(self) -> int:
        """Shortest record that holds one full window for this kind."""
        if self.kind in (SystemKind.HMM_SDA, SystemKind.HMM_LSTM):
            return self.supervector_window
        if self.kind is SystemKind.HMM_ONLY:
            return 1
        return self.resolved_window_s
