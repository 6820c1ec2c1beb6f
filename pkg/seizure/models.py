from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, model_validator


# --- Labels ---

class Label(str, Enum):
    SEIZ = "seiz"
    BCKG = "bckg"


# --- Annotations ---

class AnnotationEvent(BaseModel):
    model_config = {"frozen": True}

    start_s: float
    stop_s: float
    label: Label

    @model_validator(mode="after")
    def _check_order(self) -> AnnotationEvent:
        if not self.start_s < self.stop_s:
            raise ValueError(f"event start {self.start_s} must precede stop {self.stop_s}")
        return self

    @property
    def duration_s(self) -> float:
        return self.stop_s - self.start_s


class AnnotationSet(BaseModel):
    model_config = {"frozen": True}

    events: tuple[AnnotationEvent, ...] = ()
    record_duration_s: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_events(self) -> AnnotationSet:
        previous_stop = 0.0
        for event in self.events:
            if event.start_s < 0 or event.stop_s > self.record_duration_s + 1e-9:
                raise ValueError(
                    f"event [{event.start_s}, {event.stop_s}) outside [0, {self.record_duration_s}]"
                )
            if event.start_s < previous_stop - 1e-9:
                raise ValueError("events must be sorted and non-overlapping")
            previous_stop = event.stop_s
        return self

    def seizure_events(self) -> list[AnnotationEvent]:
        return [e for e in self.events if e.label == Label.SEIZ]

    @property
    def seizure_duration_s(self) -> float:
        return sum(e.duration_s for e in self.seizure_events())


# --- Scoring ---

class FaMode(str, Enum):
    EVENT = "event"
    EPOCH = "epoch"


class SmoothingParams(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    # 0 turns off event deletion, leaving pure thresholding when merge_gap_s is also 0
    min_event_s: float = Field(default=3.0, ge=0.0)
    merge_gap_s: float = Field(default=2.0, ge=0.0)
    class_prior_weight: float = Field(default=1.0, gt=0.0)


class ConfusionCounts(BaseModel):
    model_config = {"frozen": True}

    tp: int = Field(ge=0)
    tn: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    false_alarm_events: int = Field(default=0, ge=0)
    total_duration_s: float = Field(ge=0.0)

    @property
    def scored_epochs(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: ConfusionCounts) -> ConfusionCounts:
        return ConfusionCounts(
            tp=self.tp + other.tp,
            tn=self.tn + other.tn,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            false_alarm_events=self.false_alarm_events + other.false_alarm_events,
            total_duration_s=self.total_duration_s + other.total_duration_s,
        )


class Metrics(BaseModel):
    sensitivity: float
    specificity: float
    fa_per_24h: float


class DetPoint(BaseModel):
    threshold: float
    sensitivity: float
    specificity: float
    fa_per_24h: float
    false_positive_rate: float
    miss_rate: float


class DetCurve(BaseModel):
    points: list[DetPoint] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_thresholds(self) -> DetCurve:
        thresholds = [p.threshold for p in self.points]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("DET thresholds must be strictly increasing")
        return self

    @property
    def sensitivities(self) -> list[float]:
        return [p.sensitivity for p in self.points]
