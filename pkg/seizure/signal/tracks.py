"""Per-epoch label and posterior tracks (1-second epochs)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from seizure.errors import DataError
from seizure.models import Label

EPOCH_DURATION_S = 1.0


def _frozen(values: np.ndarray, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EpochLabelTrack:
    """One label per epoch, stored as a boolean array (True = seiz)."""

    is_seizure: np.ndarray
    epoch_duration_s: float = EPOCH_DURATION_S

    def __post_init__(self) -> None:
        object.__setattr__(self, "is_seizure", _frozen(self.is_seizure, bool))

    @classmethod
    def from_labels(cls, labels: list[Label | str]) -> EpochLabelTrack:
        return cls(np.array([Label(label) == Label.SEIZ for label in labels], dtype=bool))

    @property
    def labels(self) -> list[Label]:
        return [Label.SEIZ if s else Label.BCKG for s in self.is_seizure]

    @property
    def duration_s(self) -> float:
        return len(self) * self.epoch_duration_s

    def __len__(self) -> int:
        return int(self.is_seizure.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EpochLabelTrack):
            return NotImplemented
        return self.epoch_duration_s == other.epoch_duration_s and np.array_equal(
            self.is_seizure, other.is_seizure
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class PosteriorTrack:
    """Per-epoch seizure posterior in [0, 1], aligned to the source record."""

    values: np.ndarray
    epoch_duration_s: float = EPOCH_DURATION_S

    def __post_init__(self) -> None:
        values = _frozen(self.values, np.float64)
        if not np.all(np.isfinite(values)):
            raise DataError("posterior track contains non-finite values")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise DataError("posteriors must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PosteriorTrack):
            return NotImplemented
        return self.epoch_duration_s == other.epoch_duration_s and np.array_equal(
            self.values, other.values
        )

    __hash__ = None  # type: ignore[assignment]
