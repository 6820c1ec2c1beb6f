"""Batch PCA and constant-memory incremental PCA (sequential rank-update SVD)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg
from sklearn.decomposition import PCA
from sklearn.utils import gen_batches

from seizure.errors import ConfigError, DataError, ShapeError
from seizure.storage import load_bundle, save_bundle

logger = logging.getLogger(__name__)

DEFAULT_IPCA_BATCH = 50


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    singular_values: np.ndarray
    samples_seen: int = 0

    def __post_init__(self) -> None:
        for name in ("mean", "components", "singular_values"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        k, d = self.components.shape
        if self.mean.shape != (d,) or self.singular_values.shape != (k,):
            raise ShapeError(f"PCA parameters disagree: components {self.components.shape}, mean {self.mean.shape}")
        if k > d:
            raise ConfigError(f"output_dim {k} exceeds input_dim {d}")

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every component positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(data: np.ndarray, out_dim: int) -> PcaModel:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeError(f"PCA input must be a samples x features matrix, got {data.shape}")
    n, d = data.shape
    if n < 2:
        raise DataError(f"PCA needs at least 2 samples, got {n}")
    if not 1 <= out_dim <= min(n, d):
        raise ConfigError(f"out_dim {out_dim} must lie in [1, min(n={n}, d={d})]")
    pca = PCA(n_components=out_dim, svd_solver="full").fit(data)
    return PcaModel(
        mean=pca.mean_,
        components=_fix_signs(pca.components_),
        singular_values=pca.singular_values_,
        samples_seen=n,
    )


def _check_dim(model: PcaModel, x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    width = model.input_dim if what == "input" else model.output_dim
    if x.ndim not in (1, 2) or x.shape[-1] != width:
        raise ShapeError(f"{what} of shape {x.shape} does not match dimension {width}")
    return x


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = _check_dim(model, x, "input")
    return (x - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, y: np.ndarray) -> np.ndarray:
    y = _check_dim(model, y, "output")
    return model.mean + y @ model.components


def init_incremental(input_dim: int, output_dim: int) -> PcaModel:
    if not 1 <= output_dim <= input_dim:
        raise ConfigError(f"output_dim {output_dim} must lie in [1, {input_dim}]")
    return PcaModel(
        mean=np.zeros(input_dim),
        components=np.eye(output_dim, input_dim),
        singular_values=np.zeros(output_dim),
        samples_seen=0,
    )


def _svd(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        _, s, vt = linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except linalg.LinAlgError:
        _, s, vt = linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
    return s, vt


def ipca_partial_fit(model: PcaModel, batch: np.ndarray) -> PcaModel:
    """Fold one batch into the running mean and top-k subspace.

    Stacks the scaled previous basis, the centered batch and one mean-correction
    row; the SVD of that (k + b + 1) x d matrix gives the updated basis.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] < 1 or batch.shape[1] != model.input_dim:
        raise ShapeError(f"batch of shape {batch.shape} does not match input dimension {model.input_dim}")
    k = model.output_dim
    n_old, b = model.samples_seen, batch.shape[0]
    n_total = n_old + b
    batch_mean = batch.mean(axis=0)
    new_mean = (n_old * model.mean + b * batch_mean) / n_total

    centered = batch - batch_mean
    if n_old == 0:
        stacked = centered
    else:
        correction = np.sqrt(n_old * b / n_total) * (model.mean - batch_mean)
        stacked = np.vstack([model.singular_values[:, None] * model.components, centered, correction])

    s, vt = _svd(stacked)
    s, vt = s[:k], vt[:k]
    if vt.shape[0] < k:
        complement = linalg.null_space(vt).T[: k - vt.shape[0]]
        vt = np.vstack([vt, complement])
        s = np.concatenate([s, np.zeros(k - s.shape[0])])

    return PcaModel(mean=new_mean, components=_fix_signs(vt), singular_values=s, samples_seen=n_total)


def ipca_fit(data: np.ndarray, out_dim: int, batch_size: int = DEFAULT_IPCA_BATCH) -> PcaModel:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ShapeError(f"IPCA input must be a non-empty samples x features matrix, got {data.shape}")
    model = init_incremental(data.shape[1], out_dim)
    for rows in gen_batches(data.shape[0], batch_size):
        model = ipca_partial_fit(model, data[rows])
    return model


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, descending) between the row spaces of two bases."""
    return linalg.subspace_angles(np.asarray(a, dtype=np.float64).T, np.asarray(b, dtype=np.float64).T)


def save_pca(model: PcaModel, path: str | Path) -> None:
    save_bundle(
        path,
        "pca",
        {"mean": model.mean, "components": model.components, "singular_values": model.singular_values},
        {"samples_seen": model.samples_seen},
    )


def load_pca(path: str | Path) -> PcaModel:
    arrays, meta = load_bundle(path, "pca")
    return PcaModel(
        mean=arrays["mean"],
        components=arrays["components"],
        singular_values=arrays["singular_values"],
        samples_seen=int(meta.get("samples_seen", 0)),
    )
