"""Manual-operation counts and the wall-clock time model.

Fold-1 boxes are drawn from scratch; fold-2 corrections are additions
(objects the detector missed) and removals (detections with no object).
Expected counts follow directly from detector precision/recall:

    additions = objects * (1 - recall)
    removals  = detections * (1 - precision)
    time      = t1 * initial + t2 * (additions + removals)

Fractional expected values are preserved: when precision/recall come from
matching the very proposals being corrected, the formulas are algebraic
identities with the false-negative/false-positive counts, and rounding
would break that.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable

from boxcamp.errors import LogIntegrityError, ValidationError
from boxcamp.eventlog import OperationEvent

__all__ = [
    "TimingModel",
    "WorkloadEstimate",
    "TimingFit",
    "estimate_additions",
    "estimate_removals",
    "estimate",
    "savings_vs_manual",
    "fit_timing",
]

DEFAULT_T1_SECONDS = 10.15
DEFAULT_T2_SECONDS = 5.20
DEFAULT_IDLE_CUTOFF_SECONDS = 60.0


@dataclass(frozen=True)
class TimingModel:
    """Seconds per from-scratch annotation (t1) and per correction (t2).

    t2 pools additions and removals; idle gaps above ``idle_cutoff`` are
    not counted as working time when fitting from logs.
    """

    t1: float = DEFAULT_T1_SECONDS
    t2: float = DEFAULT_T2_SECONDS
    idle_cutoff: float = DEFAULT_IDLE_CUTOFF_SECONDS

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0 or self.idle_cutoff <= 0:
            raise ValidationError("t1, t2 and idle_cutoff must all be positive")


@dataclass(frozen=True)
class WorkloadEstimate:
    initial: float
    additions: float
    removals: float
    timing: TimingModel

    @property
    def corrections(self) -> float:
        return self.additions + self.removals

    @property
    def total_operations(self) -> float:
        return self.initial + self.additions + self.removals

    @property
    def total_time_s(self) -> float:
        return self.timing.t1 * self.initial + self.timing.t2 * self.corrections

    def to_json(self) -> bytes:
        return json.dumps(
            {
                "initial": self.initial,
                "additions": self.additions,
                "removals": self.removals,
                "total_operations": self.total_operations,
                "total_time_s": self.total_time_s,
                "timing": {"t1": self.timing.t1, "t2": self.timing.t2},
            },
            indent=2,
        ).encode("utf-8") + b"\n"

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["initial", "additions", "removals", "total_operations", "total_time_s"])
        writer.writerow(
            [repr(float(v)) for v in (self.initial, self.additions, self.removals,
                                      self.total_operations, self.total_time_s)]
        )
        return buf.getvalue().encode("utf-8")


def _check_rate(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return value


def _check_count(value: float, name: str) -> float:
    if value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


def estimate_additions(fold2_objects: float, recall: float) -> float:
    """Expected boxes the annotator must draw in fold 2: objects the detector missed."""
    _check_count(fold2_objects, "fold2_objects")
    _check_rate(recall, "recall")
    return fold2_objects * (1.0 - recall)


def estimate_removals(fold2_detections: float, precision: float) -> float:
    """Expected proposals the annotator must delete: detections with no true object."""
    _check_count(fold2_detections, "fold2_detections")
    _check_rate(precision, "precision")
    return fold2_detections * (1.0 - precision)


def estimate(
    initial: float,
    fold2_objects: float,
    fold2_detections: float,
    precision: float,
    recall: float,
    timing: TimingModel | None = None,
) -> WorkloadEstimate:
    """Compose the full workload estimate for a two-fold campaign."""
    timing = timing or TimingModel()
    _check_count(initial, "initial")
    return WorkloadEstimate(
        initial=initial,
        additions=estimate_additions(fold2_objects, recall),
        removals=estimate_removals(fold2_detections, precision),
        timing=timing,
    )


def savings_vs_manual(
    est: WorkloadEstimate, total_objects: float, timing: TimingModel | None = None
) -> float:
    """Fraction of wall-clock time saved against annotating everything from scratch."""
    timing = timing or est.timing
    if total_objects <= 0:
        raise ValidationError(f"total_objects must be > 0, got {total_objects}")
    return 1.0 - est.total_time_s / (timing.t1 * total_objects)


@dataclass(frozen=True)
class TimingFit:
    timing: TimingModel
    t1_samples: int
    t2_samples: int
    t1_defaulted: bool
    t2_defaulted: bool


def fit_timing(
    events: Iterable[OperationEvent],
    defaults: TimingModel | None = None,
) -> TimingFit:
    """Estimate t1/t2 from a recorded session log.

    t1 is the mean gap preceding fold-1 add events, t2 the mean preceding
    fold-2 add/remove events; gaps are measured between consecutive events
    of the same session and gaps above ``idle_cutoff`` are discarded as
    idle time. Classes with no usable gap fall back to the defaults, with
    the corresponding flag set.
    """
    defaults = defaults or TimingModel()
    cutoff_ms = defaults.idle_cutoff * 1000.0
    last_ts: dict[str, int] = {}
    t1_gaps: list[float] = []
    t2_gaps: list[float] = []
    for ev in events:
        prev = last_ts.get(ev.session_id)
        if prev is not None:
            if ev.ts_ms < prev:
                raise LogIntegrityError(
                    f"session {ev.session_id!r}: timestamp {ev.ts_ms} before {prev}"
                )
            gap_ms = ev.ts_ms - prev
            if gap_ms <= cutoff_ms:
                if ev.stage_tag == "fold1" and ev.kind == "add":
                    t1_gaps.append(gap_ms / 1000.0)
                elif ev.stage_tag == "fold2" and ev.kind in ("add", "remove"):
                    t2_gaps.append(gap_ms / 1000.0)
        last_ts[ev.session_id] = ev.ts_ms

    t1_defaulted = not t1_gaps
    t2_defaulted = not t2_gaps
    timing = TimingModel(
        t1=sum(t1_gaps) / len(t1_gaps) if t1_gaps else defaults.t1,
        t2=sum(t2_gaps) / len(t2_gaps) if t2_gaps else defaults.t2,
        idle_cutoff=defaults.idle_cutoff,
    )
    return TimingFit(
        timing=timing,
        t1_samples=len(t1_gaps),
        t2_samples=len(t2_gaps),
        t1_defaulted=t1_defaulted,
        t2_defaulted=t2_defaulted,
    )
