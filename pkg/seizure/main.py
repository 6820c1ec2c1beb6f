"""Command-line front end: synth, features, train, infer, score, det, ablate, transfer, shapes."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import torch
from pydantic import ValidationError

from seizure.architectures.pipeline import build_system, probe_shapes
from seizure.architectures.system import load_system, save_system, train_system
from seizure.config import settings
from seizure.errors import AlignmentError, ConfigError, NumericError, SeizureError
from seizure.experiment import (
    ExperimentConfig,
    corpora_for,
    evaluate_system,
    infer_corpus,
    load_corpus,
    load_experiment,
    save_corpus,
    score_corpus,
    synthetic_corpora,
    write_config_copy,
)
from seizure.features.io import save_features
from seizure.features.lfcc import extract_features
from seizure.models import AnnotationSet, FaMode, Metrics
from seizure.nn.layers import ActivationKind
from seizure.nn.optim import OptimizerConfig, OptimizerKind
from seizure.scoring.det import det_curve_many
from seizure.scoring.reports import plot_det, write_det_csv, write_metrics_csv
from seizure.signal.annotations import annotations_to_epoch_labels, load_annotations, load_posteriors, save_posteriors
from seizure.signal.record import load_record
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack
from seizure.storage import write_manifest

logger = logging.getLogger("seizure.main")

SYSTEM_CHOICES = ("hmm", "hmm_only", "hmm_sda", "hmm_lstm", "ipca_lstm", "cnn_mlp", "cnn_lstm")


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=level.upper(), format=settings.log_format, stream=sys.stderr, force=True)


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_experiment(args.config)
    cfg = cfg.with_overrides(seed=args.seed, out_dir=args.out, kind=args.system)
    if args.fa_mode is not None:
        cfg = cfg.model_copy(update={"experiment": cfg.experiment.model_copy(update={"fa_mode": FaMode(args.fa_mode)})})
    return cfg


def _out_dir(cfg: ExperimentConfig, args: argparse.Namespace) -> Path:
    """--out is used as given; otherwise each command writes below [experiment] out_dir."""
    if args.out:
        return Path(args.out)
    return Path(cfg.experiment.out_dir) / args.command


def _finish(cfg: ExperimentConfig, out: Path) -> None:
    write_config_copy(cfg, out)
    write_manifest(out)


def _metric_fields(m: Metrics) -> str:
    return f"sensitivity={m.sensitivity:.4f} specificity={m.specificity:.4f} fa_per_24h={m.fa_per_24h:.2f}"


# --- Commands ---


def cmd_synth(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    train, evaluation = synthetic_corpora(cfg, held_out=args.held_out)
    save_corpus(train, out / "train")
    save_corpus(evaluation, out / "eval")
    _finish(cfg, out)
    seiz = sum(ann.seizure_duration_s for _, ann in train + evaluation)
    total = sum(ann.record_duration_s for _, ann in train + evaluation)
    return f"synth records={len(train) + len(evaluation)} seiz_fraction={seiz / total:.4f} out={out}"


def cmd_features(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    paths = [Path(p) for p in args.records]
    for path in paths:
        save_features(extract_features(load_record(path), cfg.features), out / f"{path.stem}.nfea")
    _finish(cfg, out)
    return f"features files={len(paths)} out={out}"


def cmd_train(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    system_cfg = cfg.system_config()
    train = load_corpus(args.corpus) if args.corpus else corpora_for(cfg)[0]
    system = train_system(system_cfg, train)
    save_system(system, out / "system")
    _finish(cfg, out)
    final = f"{system.loss_trace[-1]:.6f}" if system.loss_trace else "n/a"
    return f"train system={system_cfg.kind.value} records={len(train)} final_loss={final} out={out / 'system'}"


def cmd_infer(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    system = load_system(args.model)
    paths = [Path(p) for p in args.records]
    tracks = infer_corpus(system, [load_record(p) for p in paths], args.jobs)
    for path, track in zip(paths, tracks):
        save_posteriors(track, out / f"{path.stem}.posteriors.csv")
    _finish(cfg, out)
    return f"infer system={system.kind.value} records={len(paths)} epochs={sum(len(t) for t in tracks)} out={out}"


def _reference_labels(path: str, track: PosteriorTrack) -> EpochLabelTrack:
    """Epoch labels covering at least the posterior track; files may stop at their last event."""
    ann = load_annotations(path)
    covered = len(track) * track.epoch_duration_s
    if ann.record_duration_s < covered:
        ann = AnnotationSet(events=ann.events, record_duration_s=covered)
    return annotations_to_epoch_labels(ann)


def _scored_pairs(args: argparse.Namespace):
    if len(args.hyp) != len(args.ref):
        raise AlignmentError(f"{len(args.hyp)} hypothesis files for {len(args.ref)} reference files")
    posteriors = [load_posteriors(p) for p in args.hyp]
    references = [_reference_labels(r, track) for r, track in zip(args.ref, posteriors)]
    return posteriors, references


def cmd_score(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    posteriors, references = _scored_pairs(args)
    result = score_corpus(posteriors, references, cfg.smoothing, cfg.experiment.fa_mode)
    write_metrics_csv([(cfg.experiment.name, result)], out / "metrics.csv")
    _finish(cfg, out)
    return f"score records={len(posteriors)} {_metric_fields(result)} out={out / 'metrics.csv'}"


def cmd_det(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    posteriors, references = _scored_pairs(args)
    curve = det_curve_many(list(zip(posteriors, references)), cfg.smoothing, fa_mode=cfg.experiment.fa_mode)
    write_det_csv(curve, out / "det.csv")
    if args.plot:
        plot_det({cfg.experiment.name: curve}, out / "det.png")
    _finish(cfg, out)
    return f"det points={len(curve.points)} out={out / 'det.csv'}"


def _ablation_variants(cfg: ExperimentConfig, axis: str):
    if axis == "optimizer":
        for kind in OptimizerKind:
            optimizer = OptimizerConfig(kind=kind, decay=cfg.optimizer.decay)
            yield kind.value, cfg.system_config(optimizer=optimizer)
    else:
        for kind in ActivationKind:
            yield kind.value, cfg.system_config(activation=kind)


def cmd_ablate(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    """Same system and corpus, one row per optimizer or activation."""
    out = _out_dir(cfg, args)
    train, evaluation = corpora_for(cfg)
    rows = []
    for name, system_cfg in _ablation_variants(cfg, args.axis):
        logger.info("Ablation %s=%s", args.axis, name)
        system = train_system(system_cfg, train)
        at_threshold, _, _ = evaluate_system(system, evaluation, cfg, args.jobs)
        rows.append((name, at_threshold))
    write_metrics_csv(rows, out / f"ablation_{args.axis}.csv", label=args.axis)
    _finish(cfg, out)
    best = max(rows, key=lambda r: (r[1].sensitivity + r[1].specificity, -r[1].fa_per_24h))
    return f"ablate axis={args.axis} rows={len(rows)} best={best[0]} out={out / f'ablation_{args.axis}.csv'}"


def cmd_transfer(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    """Train once, then score a matched-instrumentation and a held-out-instrumentation corpus."""
    out = _out_dir(cfg, args)
    train, matched = synthetic_corpora(cfg, held_out=False)
    _, held_out = synthetic_corpora(cfg, held_out=True)
    system = train_system(cfg.system_config(), train)
    rows = []
    for name, corpus in ((cfg.synthesis.instrumentation.name, matched), (cfg.transfer.name, held_out)):
        at_threshold, curve, _ = evaluate_system(system, corpus, cfg, args.jobs)
        write_det_csv(curve, out / f"det_{name}.csv")
        rows.append((name, at_threshold))
    write_metrics_csv(rows, out / "transfer.csv", label="corpus")
    _finish(cfg, out)
    return (
        f"transfer system={system.kind.value} "
        + " ".join(f"{name}_sensitivity={m.sensitivity:.4f}" for name, m in rows)
        + f" out={out / 'transfer.csv'}"
    )


def cmd_shapes(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    out = _out_dir(cfg, args)
    system_cfg = cfg.system_config()
    channels = cfg.synthesis.num_channels
    declared = build_system(system_cfg, channels)
    measured = probe_shapes(system_cfg, channels)
    consistent = declared.shape_chain() == measured.shape_chain()
    out.mkdir(parents=True, exist_ok=True)
    (out / "shapes.txt").write_text(measured.describe() + "\n")
    logger.info("Measured shape chain for %s:\n%s", system_cfg.kind.value, measured.describe())
    if not consistent:
        logger.error("Declared chain:\n%s", declared.describe())
    _finish(cfg, out)
    return f"shapes system={system_cfg.kind.value} stages={len(measured.stages)} consistent={str(consistent).lower()} out={out / 'shapes.txt'}"


COMMANDS: dict[str, Callable[[ExperimentConfig, argparse.Namespace], str]] = {
    "synth": cmd_synth,
    "features": cmd_features,
    "train": cmd_train,
    "infer": cmd_infer,
    "score": cmd_score,
    "det": cmd_det,
    "ablate": cmd_ablate,
    "transfer": cmd_transfer,
    "shapes": cmd_shapes,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment document")
    common.add_argument("--seed", type=int, help="overrides [experiment] seed")
    common.add_argument("--jobs", type=int, default=settings.jobs, help="record-level parallelism")
    common.add_argument("--out", help="output directory")
    common.add_argument("--system", choices=SYSTEM_CHOICES, help="overrides [system] kind")
    common.add_argument("--fa-mode", choices=[m.value for m in FaMode], help="false alarms as events or epochs")
    common.add_argument("--log-level", default=settings.log_level)

    parser = argparse.ArgumentParser(prog="seizure", description="EEG seizure detection experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="generate train/eval corpora")
    synth.add_argument("--held-out", action="store_true", help="eval corpus uses the [transfer] instrumentation")

    features = sub.add_parser("features", parents=[common], help="extract feature files")
    features.add_argument("records", nargs="+")

    train = sub.add_parser("train", parents=[common], help="train a system")
    train.add_argument("--corpus", help="corpus directory written by synth")

    infer = sub.add_parser("infer", parents=[common], help="posteriors for records")
    infer.add_argument("--model", required=True, help="system directory written by train")
    infer.add_argument("records", nargs="+")

    for name in ("score", "det"):
        p = sub.add_parser(name, parents=[common], help=f"{name} posterior files against annotations")
        p.add_argument("--hyp", nargs="+", required=True, help="posterior CSV files")
        p.add_argument("--ref", nargs="+", required=True, help="annotation CSV files, same order")
        if name == "det":
            p.add_argument("--plot", action="store_true")

    ablate = sub.add_parser("ablate", parents=[common], help="optimizer or activation comparison")
    ablate.add_argument("--axis", choices=("optimizer", "activation"), required=True)

    sub.add_parser("transfer", parents=[common], help="matched vs held-out instrumentation")
    sub.add_parser("shapes", parents=[common], help="probe-measured shape chain")
    return parser


def _run_command(args: argparse.Namespace) -> str:
    """Run one command, translating library exceptions into the CLI error classes."""
    try:
        cfg = _experiment(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    except (FloatingPointError, ZeroDivisionError, OverflowError, np.linalg.LinAlgError) as e:
        raise NumericError(f"{type(e).__name__}: {e}") from e


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_level)
    torch.set_num_threads(settings.torch_threads)
    try:
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
        summary = _run_command(args)
    except SeizureError as e:
        detail = " ".join(str(e).split())
        logger.error("%s failed: %s", args.command, detail)
        print(f"error={e.error_class} detail={detail}", file=sys.stderr)
        return e.exit_code
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
