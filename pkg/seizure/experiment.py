"""Experiment documents (INI), corpora on disk and the shared evaluation loop."""

from __future__ import annotations

import configparser
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, model_validator

from seizure.architectures.config import SystemConfig, SystemKind, parse_system_kind
from seizure.architectures.system import TrainedSystem, infer_system
from seizure.config import settings
from seizure.errors import ConfigError, DataError
from seizure.features.lfcc import FeatureConfig
from seizure.hmm.model import HmmConfig
from seizure.models import AnnotationSet, DetCurve, DetPoint, FaMode, Metrics, SmoothingParams
from seizure.nn.optim import OptimizerConfig
from seizure.scoring.det import det_curve_many, operating_point
from seizure.scoring.epochs import metrics, score_epochs
from seizure.scoring.smoothing import smooth_hypotheses
from seizure.signal.annotations import annotations_to_epoch_labels, load_annotations, save_annotations
from seizure.signal.record import EegRecord, load_record, save_record
from seizure.signal.synth import InstrumentationProfile, SynthesisConfig, derive_seeds, synthesize_corpus
from seizure.signal.tracks import EpochLabelTrack, PosteriorTrack

logger = logging.getLogger(__name__)

CONFIG_COPY_NAME = "experiment.ini"
CORPUS_INDEX = "corpus.json"
Corpus = list[tuple[EegRecord, AnnotationSet]]

_SYSTEM_RESERVED = {"features", "hmm", "optimizer", "seed"}


class ExperimentSection(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    name: str = "synthetic"
    seed: int = Field(default_factory=lambda: settings.default_seed)
    out_dir: str = Field(default_factory=lambda: settings.output_dir)
    train_records: int = Field(default=4, ge=1)
    eval_records: int = Field(default=4, ge=1)
    train_corpus: str | None = None
    eval_corpus: str | None = None
    fa_mode: FaMode = Field(default_factory=lambda: FaMode(settings.fa_mode))
    target_sensitivity: float = Field(default=0.9, ge=0.0, le=1.0)


def _held_out_profile() -> InstrumentationProfile:
    return InstrumentationProfile(name="held_out", gain=0.7, noise_exponent=1.6, line_noise_uv=6.0)


class ExperimentConfig(BaseModel):
    """Every knob of one run; sections map one-to-one onto INI sections."""

    model_config = {"frozen": True, "extra": "forbid"}

    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    synthesis: SynthesisConfig = Field(default_factory=SynthesisConfig)
    transfer: InstrumentationProfile = Field(default_factory=_held_out_profile)
    features: FeatureConfig = Field(default_factory=FeatureConfig)
    hmm: HmmConfig = Field(default_factory=HmmConfig)
    system: dict[str, Any] = Field(default_factory=dict)
    optimizer: OptimizerConfig = Field(default_factory=lambda: OptimizerConfig(decay=1e-4))
    smoothing: SmoothingParams = Field(default_factory=SmoothingParams)

    @model_validator(mode="after")
    def _check_system(self) -> ExperimentConfig:
        reserved = _SYSTEM_RESERVED & set(self.system)
        if reserved:
            raise ValueError(f"[system] may not set {sorted(reserved)}; use their own sections")
        self.system_config()
        return self

    def system_config(self, kind: SystemKind | str | None = None, **overrides: Any) -> SystemConfig:
        values = {**self.system, **overrides}
        if kind is not None:
            values["kind"] = parse_system_kind(kind)
        values.setdefault("optimizer", self.optimizer)
        return SystemConfig.model_validate(
            {**values, "seed": self.experiment.seed, "features": self.features, "hmm": self.hmm}
        )

    def with_overrides(self, seed: int | None = None, out_dir: str | None = None, kind: str | None = None) -> ExperimentConfig:
        experiment = self.experiment.model_copy(
            update={k: v for k, v in {"seed": seed, "out_dir": out_dir}.items() if v is not None}
        )
        system = dict(self.system)
        if kind is not None:
            system["kind"] = parse_system_kind(kind).value
        return self.model_validate({**self.model_dump(), "experiment": experiment.model_dump(), "system": system})


# --- INI encoding ---


def _decode(value: str) -> Any:
    value = value.strip()
    if value.lower() in ("none", "null", ""):
        return None
    if "," in value:
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def _encode(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        joined = ",".join(_encode(v) for v in value)
        return joined + "," if len(value) == 1 else joined
    return str(value)


def parse_experiment(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from e

    sections: dict[str, dict[str, Any]] = {}
    for name in parser.sections():
        sections[name] = {key: _decode(raw) for key, raw in parser.items(name)}
    instrumentation = sections.pop("instrumentation", None)
    if instrumentation is not None:
        sections.setdefault("synthesis", {})["instrumentation"] = instrumentation
    try:
        return ExperimentConfig.model_validate(sections)
    except ValidationError as e:
        raise ConfigError(f"{source}: {e}") from e


def load_experiment(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    return parse_experiment(text, str(path))


def dump_experiment(cfg: ExperimentConfig) -> str:
    """Fully expanded INI text; parse_experiment(dump_experiment(c)) == c."""
    data = cfg.model_dump(mode="json")
    data["instrumentation"] = data["synthesis"].pop("instrumentation")
    order = ("experiment", "synthesis", "instrumentation", "transfer", "features", "hmm", "system", "optimizer", "smoothing")
    lines = []
    for section in order:
        lines.append(f"[{section}]")
        lines += [f"{key} = {_encode(value)}" for key, value in sorted(data[section].items())]
        lines.append("")
    return "\n".join(lines)


def write_config_copy(cfg: ExperimentConfig, out_dir: str | Path) -> Path:
    path = Path(out_dir) / CONFIG_COPY_NAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dump_experiment(cfg))
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e
    return path


# --- Corpora ---


def synthetic_corpora(cfg: ExperimentConfig, held_out: bool = False) -> tuple[Corpus, Corpus]:
    """(train, eval) corpora; with held_out the eval corpus uses the transfer instrumentation."""
    train_seed, eval_seed = derive_seeds(cfg.experiment.seed, 2)
    train = synthesize_corpus(cfg.synthesis, cfg.experiment.train_records, train_seed)
    eval_synth = cfg.synthesis.model_copy(update={"instrumentation": cfg.transfer}) if held_out else cfg.synthesis
    evaluation = synthesize_corpus(eval_synth, cfg.experiment.eval_records, eval_seed)
    return train, evaluation


def save_corpus(corpus: Corpus, directory: str | Path) -> Path:
    root = Path(directory)
    entries = []
    for i, (record, ann) in enumerate(corpus):
        stem = f"rec_{i:04d}"
        save_record(record, root / f"{stem}.ndet")
        save_annotations(ann, root / f"{stem}.csv")
        entries.append({"record": f"{stem}.ndet", "annotations": f"{stem}.csv", "duration_s": record.duration_s})
    (root / CORPUS_INDEX).write_text(json.dumps({"records": entries}, indent=2) + "\n")
    return root


def load_corpus(directory: str | Path) -> Corpus:
    root = Path(directory)
    index_path = root / CORPUS_INDEX
    try:
        entries = json.loads(index_path.read_text())["records"]
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise DataError(f"Unreadable corpus index {index_path}: {e}") from e
    corpus = []
    for entry in entries:
        record = load_record(root / entry["record"])
        corpus.append((record, load_annotations(root / entry["annotations"], record.duration_s)))
    return corpus


def corpora_for(cfg: ExperimentConfig, held_out: bool = False) -> tuple[Corpus, Corpus]:
    """Corpora named in the config, synthesizing whichever is not given as a directory."""
    train = load_corpus(cfg.experiment.train_corpus) if cfg.experiment.train_corpus else None
    evaluation = load_corpus(cfg.experiment.eval_corpus) if cfg.experiment.eval_corpus else None
    if train is None or evaluation is None:
        synth_train, synth_eval = synthetic_corpora(cfg, held_out)
        train = train if train is not None else synth_train
        evaluation = evaluation if evaluation is not None else synth_eval
    return train, evaluation


# --- Evaluation ---


def infer_corpus(system: TrainedSystem, records: list[EegRecord], jobs: int = 1) -> list[PosteriorTrack]:
    if jobs <= 1:
        return [infer_system(system, record) for record in records]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda record: infer_system(system, record), records))


def score_corpus(
    posteriors: list[PosteriorTrack],
    references: list[EpochLabelTrack],
    smoothing: SmoothingParams,
    fa_mode: FaMode | str,
) -> Metrics:
    """Pooled metrics over every record at the smoothing threshold."""
    if len(posteriors) != len(references):
        raise DataError(f"{len(posteriors)} posterior tracks for {len(references)} references")
    total = None
    for post, ref in zip(posteriors, references):
        hyp, _ = smooth_hypotheses(post, smoothing)
        counts = score_epochs(ref, hyp)
        total = counts if total is None else total + counts
    if total is None:
        raise DataError("nothing to score")
    return metrics(total, fa_mode)


def evaluate_system(
    system: TrainedSystem, corpus: Corpus, cfg: ExperimentConfig, jobs: int = 1
) -> tuple[Metrics, DetCurve, DetPoint]:
    """Metrics at the configured threshold, the full DET sweep and its point nearest the target sensitivity."""
    posteriors = infer_corpus(system, [record for record, _ in corpus], jobs)
    references = [annotations_to_epoch_labels(ann) for _, ann in corpus]
    at_threshold = score_corpus(posteriors, references, cfg.smoothing, cfg.experiment.fa_mode)
    curve = det_curve_many(list(zip(posteriors, references)), cfg.smoothing, fa_mode=cfg.experiment.fa_mode)
    return at_threshold, curve, operating_point(curve, cfg.experiment.target_sensitivity)
