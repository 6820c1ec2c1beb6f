"""CSV tables and DET plots written by the command line and the evaluation scripts."""

from __future__ import annotations

import csv
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from seizure.errors import DataError  # noqa: E402
from seizure.models import DetCurve, Metrics  # noqa: E402

logger = logging.getLogger(__name__)

DET_COLUMNS = ("threshold", "sensitivity", "specificity", "fa_per_24h", "fpr", "miss")
METRIC_COLUMNS = ("system", "sensitivity", "specificity", "fa_per_24h")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _open_for_write(path: str | Path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e


def write_det_csv(curve: DetCurve, path: str | Path) -> None:
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DET_COLUMNS)
        for p in curve.points:
            writer.writerow(
                [_fmt(p.threshold), _fmt(p.sensitivity), _fmt(p.specificity),
                 _fmt(p.fa_per_24h), _fmt(p.false_positive_rate), _fmt(p.miss_rate)]
            )


def write_metrics_csv(rows: Sequence[tuple[str, Metrics]], path: str | Path, label: str = "system") -> None:
    """One row per (name, metrics); the first column header is *label*."""
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow((label,) + METRIC_COLUMNS[1:])
        for name, m in rows:
            writer.writerow([name, _fmt(m.sensitivity), _fmt(m.specificity), _fmt(m.fa_per_24h)])


def read_metrics_csv(path: str | Path) -> list[dict[str, str]]:
    try:
        with Path(path).open(newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e


def plot_det(curves: Mapping[str, DetCurve], path: str | Path, title: str = "DET") -> None:
    """Miss rate against false alarms per 24 hours, one line per system."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for name, curve in curves.items():
        ax.plot([p.fa_per_24h for p in curve.points], [p.miss_rate for p in curve.points], marker=".", label=name)
    ax.set_xlabel("False alarms per 24 h")
    ax.set_ylabel("Miss rate")
    ax.set_xscale("symlog")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("Wrote DET plot %s", path)
