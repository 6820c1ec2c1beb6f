"""Left-to-right GMM-HMM parameters, diagonal Gaussian mixture densities and model files."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import logsumexp

from seizure.config import settings
from seizure.errors import DataError, ShapeError
from seizure.models import Label
from seizure.storage import load_bundle, save_bundle

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))
_CHUNK_FRAMES = 4096
_TOL = 1e-8


class HmmConfig(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    num_states: int = Field(default=3, ge=1)
    num_mixtures: int = Field(default=8, ge=1)
    iterations: int = Field(default=20, ge=0)
    variance_floor_scale: float = Field(default_factory=lambda: settings.hmm_variance_floor_scale, gt=0)
    min_variance: float = Field(default_factory=lambda: settings.hmm_min_variance, gt=0)
    balance_ratio: float = Field(default=1.0, gt=0)
    max_sequences_per_class: int = Field(default=4000, ge=1)
    kmeans_max_frames: int = Field(default_factory=lambda: settings.kmeans_max_frames, ge=1)


@dataclass(frozen=True)
class MixtureSet:
    """Diagonal-covariance Gaussian mixture of one HMM state."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GmmHmm:
    """Left-to-right HMM (self-loop or advance) with M diagonal Gaussians per state.

    Decoding always starts in state 0 and may end in any state.
    """

    label: Label
    transitions: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    variance_floor: np.ndarray

    def __post_init__(self) -> None:
        for name in ("transitions", "weights", "means", "variances", "variance_floor"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "label", Label(self.label))

        s, m, d = self.means.shape
        if self.transitions.shape != (s, s) or self.weights.shape != (s, m):
            raise ShapeError(f"inconsistent HMM parameter shapes for {s} states x {m} mixtures")
        if self.variances.shape != (s, m, d) or self.variance_floor.shape != (d,):
            raise ShapeError(f"variance shapes do not match means {self.means.shape}")
        allowed = np.eye(s, dtype=bool) | np.eye(s, k=1, dtype=bool)
        if np.any(self.transitions[~allowed] != 0.0):
            raise DataError("transitions must be left-to-right (self-loop or next state only)")
        if np.any(self.transitions < 0) or not np.allclose(self.transitions.sum(axis=1), 1.0, atol=_TOL):
            raise DataError("transition rows must be non-negative and sum to 1")
        if np.any(self.weights < 0) or not np.allclose(self.weights.sum(axis=1), 1.0, atol=_TOL):
            raise DataError("mixture weights must be non-negative and sum to 1 per state")
        if np.any(self.variances < self.variance_floor * (1.0 - 1e-12)) or np.any(self.variance_floor <= 0):
            raise DataError("variances must be positive and respect the variance floor")

    @property
    def num_states(self) -> int:
        return self.means.shape[0]

    @property
    def num_mixtures(self) -> int:
        return self.means.shape[1]

    @property
    def dim(self) -> int:
        return self.means.shape[2]

    @property
    def log_transitions(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.transitions)

    @property
    def log_start(self) -> np.ndarray:
        start = np.full(self.num_states, -np.inf)
        start[0] = 0.0
        return start

    def state(self, index: int) -> MixtureSet:
        return MixtureSet(self.weights[index], self.means[index], self.variances[index])

    def replace(self, **changes: np.ndarray) -> GmmHmm:
        params = {
            "label": self.label,
            "transitions": self.transitions,
            "weights": self.weights,
            "means": self.means,
            "variances": self.variances,
            "variance_floor": self.variance_floor,
        }
        params.update(changes)
        return GmmHmm(**params)


def _check_frames(frames: np.ndarray, dim: int) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[None, :]
    if frames.ndim != 2 or frames.shape[1] != dim:
        raise ShapeError(f"frames of shape {frames.shape} do not match model dimension {dim}")
    return frames


def component_log_densities(
    frames: np.ndarray, weights: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> np.ndarray:
    """log(w_k) + log N(x; mu_k, diag var_k) for every frame and component.

    Components may carry leading state axes: means of shape (..., K, D) give
    output (T, ..., K).
    """
    d = means.shape[-1]
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    const = log_w - 0.5 * (d * LOG_2PI + np.sum(np.log(variances), axis=-1))
    inv_var = 1.0 / variances
    out = np.empty((frames.shape[0],) + means.shape[:-1])
    for start in range(0, frames.shape[0], _CHUNK_FRAMES):
        chunk = frames[start : start + _CHUNK_FRAMES]
        expand = (slice(None),) + (None,) * (means.ndim - 1) + (slice(None),)
        diff = chunk[expand] - means
        out[start : start + _CHUNK_FRAMES] = const - 0.5 * np.sum(diff * diff * inv_var, axis=-1)
    return out


def gmm_log_likelihood(mixture: MixtureSet, x: np.ndarray) -> np.ndarray | float:
    """Log density of one frame (returns a float) or of a (T, D) batch (returns (T,))."""
    single = np.ndim(x) == 1
    frames = _check_frames(x, mixture.means.shape[-1])
    comps = component_log_densities(frames, mixture.weights, mixture.means, mixture.variances)
    with np.errstate(divide="ignore"):
        result = logsumexp(comps, axis=-1)
    return float(result[0]) if single else result


def state_log_likelihoods(model: GmmHmm, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-state emission log-likelihoods (T, S) and the component terms (T, S, M)."""
    frames = _check_frames(frames, model.dim)
    comps = component_log_densities(frames, model.weights, model.means, model.variances)
    with np.errstate(divide="ignore"):
        return logsumexp(comps, axis=-1), comps


def save_model(model: GmmHmm, path: str | Path) -> None:
    save_bundle(
        path,
        "gmm_hmm",
        {
            "transitions": model.transitions,
            "weights": model.weights,
            "means": model.means,
            "variances": model.variances,
            "variance_floor": model.variance_floor,
        },
        {"label": model.label.value},
    )


def load_model(path: str | Path) -> GmmHmm:
    arrays, meta = load_bundle(path, "gmm_hmm")
    try:
        return GmmHmm(label=Label(meta["label"]), **arrays)
    except (KeyError, TypeError) as e:
        raise DataError(f"Model file {path} is missing parameters: {e}") from e
