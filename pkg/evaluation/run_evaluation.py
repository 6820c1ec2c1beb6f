"""Train every system on one synthetic corpus, then score it on matched and held-out eval corpora."""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import torch

from seizure.architectures.config import SystemKind
from seizure.architectures.system import train_system
from seizure.config import settings
from seizure.experiment import ExperimentConfig, evaluate_system, load_experiment, synthetic_corpora
from seizure.scoring.reports import plot_det, write_det_csv

EXPERIMENTS_DIR = Path(__file__).parent / "experiments"
RESULTS_DIR = Path(__file__).parent / "results"

logging.basicConfig(level=logging.INFO, format=settings.log_format)
logger = logging.getLogger(__name__)


def _metrics_dict(m) -> dict:
    return {"sensitivity": m.sensitivity, "specificity": m.specificity, "fa_per_24h": m.fa_per_24h}


def evaluate_kind(cfg: ExperimentConfig, kind: SystemKind, corpora: dict, out_dir: Path) -> dict:
    """Train one system and score it on every eval corpus."""
    train, evaluations = corpora["train"], corpora["eval"]
    start = time.time()
    system = train_system(cfg.system_config(kind), train)
    train_seconds = time.time() - start

    result = {
        "system": kind.value,
        "train_seconds": round(train_seconds, 2),
        "loss_trace": system.loss_trace,
        "corpora": {},
    }
    curves = {}
    for name, corpus in evaluations.items():
        at_threshold, curve, point = evaluate_system(system, corpus, cfg)
        write_det_csv(curve, out_dir / f"det_{kind.value}_{name}.csv")
        curves[name] = curve
        result["corpora"][name] = {
            "at_threshold": _metrics_dict(at_threshold),
            "operating_point": point.model_dump(),
        }
    result["_curves"] = curves
    return result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(EXPERIMENTS_DIR / "trend.ini"))
    parser.add_argument("--systems", nargs="*", default=[k.value for k in SystemKind])
    args = parser.parse_args()

    torch.set_num_threads(settings.torch_threads)
    cfg = load_experiment(args.config)
    out_dir = RESULTS_DIR / cfg.experiment.name
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"Synthesizing corpora for '{cfg.experiment.name}' (seed {cfg.experiment.seed})...")
    train, matched = synthetic_corpora(cfg, held_out=False)
    _, held_out = synthetic_corpora(cfg, held_out=True)
    corpora = {"train": train, "eval": {"matched": matched, "held_out": held_out}}

    results = []
    curves = {}
    kinds = [SystemKind(k) for k in args.systems]
    print(f"Running evaluation on {len(kinds)} systems...")
    for i, kind in enumerate(kinds):
        print(f"  [{i+1}/{len(kinds)}] {kind.value}...", end=" ", flush=True)
        try:
            result = evaluate_kind(cfg, kind, corpora, out_dir)
            curves[kind.value] = result.pop("_curves")["matched"]
            results.append(result)
            print(f"done ({result['train_seconds']:.1f}s)")
        except Exception as e:
            logger.exception("Evaluation of %s failed", kind.value)
            print(f"FAILED: {e}")
            results.append({"system": kind.value, "error": str(e)})

    output_path = out_dir / "evaluation_results.json"
    with open(output_path, "w") as f:
        json.dump({"experiment": cfg.experiment.name, "results": results}, f, indent=2)
    if curves:
        plot_det(curves, out_dir / "det_matched.png", title=f"DET ({cfg.experiment.name}, matched)")
    print(f"\nResults saved to {output_path}")

    successful = [r for r in results if "error" not in r]
    print(f"  Successful: {len(successful)}/{len(results)}")


if __name__ == "__main__":
    main()
