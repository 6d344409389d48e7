"""Sequence-aware dataset splitting and the workload sweep over fractions.

Splitting happens inside each video sequence in frame order, never randomly:
fold 1 takes a prefix of every sequence so both folds sample every sequence,
and the first frame of every sequence always lands in fold 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

from boxcamp.dataio.types import AnnotationSet
from boxcamp.errors import ExtrapolationError, ParseError, ValidationError
from boxcamp.workload import TimingModel, WorkloadEstimate, estimate

__all__ = [
    "SplitPoint",
    "QualityPoint",
    "QualityCurve",
    "WorkloadCurve",
    "schedule",
    "split",
    "sweep",
    "optimum",
    "saturating_quality",
    "load_quality_curve",
    "write_workload_curve_csv",
    "load_workload_curve_csv",
]

# Guard against float products like 0.07 * 100 = 7.000000000000001 pushing
# ceil one frame too far; counts here are far below 1/EPS.
_CEIL_EPS = 1e-9


def schedule() -> list[float]:
    """The swept fold-1 fractions: 1%..10% by 1%, then 15%..95% by 5%."""
    return [i / 100 for i in range(1, 11)] + [i / 100 for i in range(15, 100, 5)]


@dataclass(frozen=True)
class SplitPoint:
    fraction: float
    fold1_image_ids: tuple[int, ...]
    fold2_image_ids: tuple[int, ...]


def split(dataset: AnnotationSet, fraction: float) -> SplitPoint:
    """Partition a dataset at the given fold-1 fraction.

    Each sequence contributes its first ceil(fraction * length) frames
    (at least one, so every sequence is represented) to fold 1, in frame
    order; the remainder goes to fold 2.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
    if not dataset.images:
        raise ValidationError("cannot split an empty dataset")

    sequences: dict[str, list] = {}
    for im in dataset.images:
        sequences.setdefault(im.sequence_id, []).append(im)

    fold1: list[int] = []
    fold2: list[int] = []
    for seq_id in sorted(sequences):
        frames = sorted(sequences[seq_id], key=lambda im: im.frame_index)
        n = len(frames)
        k = max(1, min(n, math.ceil(fraction * n - _CEIL_EPS)))
        fold1.extend(im.id for im in frames[:k])
        fold2.extend(im.id for im in frames[k:])
    return SplitPoint(fraction, tuple(fold1), tuple(fold2))


@dataclass(frozen=True)
class QualityPoint:
    fraction: float
    precision: float
    recall: float
    detections: float | None = None
    map_value: float | None = None


@dataclass(frozen=True)
class QualityCurve:
    """Detector quality as a function of the fold-1 fraction.

    Built either from measured per-split evaluation files or from the
    parametric saturating model; queried by linear interpolation, never
    extrapolated.
    """

    points: tuple[QualityPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValidationError("quality curve needs at least one point")
        fractions = [p.fraction for p in self.points]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValidationError("quality curve fractions must be strictly increasing")
        for p in self.points:
            if not 0.0 <= p.precision <= 1.0 or not 0.0 <= p.recall <= 1.0:
                raise ValidationError(f"rates at fraction {p.fraction} outside [0, 1]")

    @property
    def provides_detections(self) -> bool:
        return all(p.detections is not None for p in self.points)

    def at(self, fraction: float) -> QualityPoint:
        pts = self.points
        if fraction < pts[0].fraction - 1e-12 or fraction > pts[-1].fraction + 1e-12:
            raise ExtrapolationError(
                f"fraction {fraction} outside measured range "
                f"[{pts[0].fraction}, {pts[-1].fraction}]"
            )
        for p in pts:
            if abs(p.fraction - fraction) <= 1e-12:
                return p
        hi = next(i for i, p in enumerate(pts) if p.fraction > fraction)
        lo = hi - 1
        a, b = pts[lo], pts[hi]
        t = (fraction - a.fraction) / (b.fraction - a.fraction)

        def lerp(x, y):
            if x is None or y is None:
                return None
            return x + t * (y - x)

        return QualityPoint(
            fraction=fraction,
            precision=a.precision + t * (b.precision - a.precision),
            recall=a.recall + t * (b.recall - a.recall),
            detections=lerp(a.detections, b.detections),
            map_value=lerp(a.map_value, b.map_value),
        )


def saturating_quality(
    kappa: float = 0.03, fractions: Sequence[float] | None = None
) -> QualityCurve:
    """Parametric desk-scale quality model: p(f) = r(f) = 1 - exp(-f / kappa)."""
    if kappa <= 0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    fractions = list(fractions) if fractions is not None else schedule()
    return QualityCurve(
        tuple(
            QualityPoint(f, 1.0 - math.exp(-f / kappa), 1.0 - math.exp(-f / kappa))
            for f in fractions
        )
    )


@dataclass(frozen=True)
class WorkloadCurve:
    points: tuple[tuple[float, WorkloadEstimate], ...]

    def fractions(self) -> list[float]:
        return [f for f, _ in self.points]


def sweep(
    dataset: AnnotationSet,
    quality: QualityCurve,
    timing: TimingModel | None = None,
    fractions: Sequence[float] | None = None,
) -> WorkloadCurve:
    """Workload estimate at every swept fraction.

    Fold-1 boxes are counted from the actual split; fold-2 correction
    counts come from the quality curve at that fraction. When the curve
    does not carry measured detection counts, the count consistent with
    the given rates (objects * recall / precision) is used.
    """
    timing = timing or TimingModel()
    fractions = list(fractions) if fractions is not None else schedule()
    per_image = {im.id: len(dataset.boxes.get(im.id, [])) for im in dataset.images}

    points = []
    for f in fractions:
        sp = split(dataset, f)
        initial = sum(per_image[i] for i in sp.fold1_image_ids)
        objects = sum(per_image[i] for i in sp.fold2_image_ids)
        q = quality.at(f)
        if q.detections is not None:
            detections = q.detections
        elif q.precision > 0:
            detections = objects * q.recall / q.precision
        else:
            detections = 0.0
        points.append(
            (f, estimate(initial, objects, detections, q.precision, q.recall, timing))
        )
    points.sort(key=lambda pair: pair[0])
    return WorkloadCurve(tuple(points))


def optimum(curve: WorkloadCurve, objective: Literal["operations", "time"]) -> float:
    """The fraction minimizing the chosen objective; ties go to the smaller fraction."""
    if objective not in ("operations", "time"):
        raise ValidationError(f"unknown objective {objective!r}")
    if not curve.points:
        raise ValidationError("cannot take the optimum of an empty curve")
    key = (
        (lambda est: est.total_operations)
        if objective == "operations"
        else (lambda est: est.total_time_s)
    )
    best_f, best_v = None, None
    for f, est in curve.points:
        v = key(est)
        if best_v is None or v < best_v:
            best_f, best_v = f, v
    return best_f


# --- curve files ---------------------------------------------------------


def _quality_point_from_mapping(raw: dict, where: str) -> QualityPoint:
    try:
        return QualityPoint(
            fraction=float(raw["fraction"]),
            precision=float(raw["precision"]),
            recall=float(raw["recall"]),
            detections=float(raw["detections"]) if raw.get("detections") not in (None, "") else None,
            map_value=float(raw["map"]) if raw.get("map") not in (None, "") else None,
        )
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ParseError(f"{where}: non-numeric value: {exc}") from exc


def load_quality_curve(source: str | Path | bytes) -> QualityCurve:
    """Load a quality curve from a JSON or CSV file.

    JSON: an array (or {"points": [...]}) of objects with fraction,
    precision, recall and optional detections / map. CSV: a header row
    with the same column names.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
        is_json = text.lstrip()[:1] in ("[", "{")
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        is_json = path.suffix.lower() == ".json" or text.lstrip()[:1] in ("[", "{")

    points = []
    if is_json:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"quality curve: invalid JSON: {exc.msg}") from exc
        rows = doc.get("points") if isinstance(doc, dict) else doc
        if not isinstance(rows, list):
            raise ParseError("quality curve: expected an array of points")
        for i, raw in enumerate(rows):
            points.append(_quality_point_from_mapping(raw, f"points[{i}]"))
    else:
        reader = csv.DictReader(io.StringIO(text))
        for i, raw in enumerate(reader):
            points.append(_quality_point_from_mapping(raw, f"row {i + 2}"))
    points.sort(key=lambda p: p.fraction)
    return QualityCurve(tuple(points))


def write_workload_curve_csv(curve: WorkloadCurve) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["fraction", "initial", "additions", "removals",
                     "total_operations", "total_time_s"])
    for f, est in curve.points:
        writer.writerow([
            repr(float(f)),
            repr(float(est.initial)),
            repr(float(est.additions)),
            repr(float(est.removals)),
            repr(float(est.total_operations)),
            repr(float(est.total_time_s)),
        ])
    return buf.getvalue().encode("utf-8")


def load_workload_curve_csv(
    source: str | Path | bytes, timing: TimingModel | None = None
) -> WorkloadCurve:
    """Load a workload curve from CSV.

    Accepts either full rows (as written by :func:`write_workload_curve_csv`)
    or minimal (fraction, total_operations) rows such as published totals;
    minimal rows are loaded as all-initial estimates, which preserves the
    operations objective but makes the time objective a plain rescale.
    """
    timing = timing or TimingModel()
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError("workload curve: empty file")
    fields = set(reader.fieldnames)
    if "fraction" not in fields:
        raise ParseError("workload curve: missing 'fraction' column")

    points = []
    degraded = False
    for i, raw in enumerate(reader):
        where = f"row {i + 2}"
        try:
            f = float(raw["fraction"])
            if {"initial", "additions", "removals"} <= fields:
                est = WorkloadEstimate(
                    initial=float(raw["initial"]),
                    additions=float(raw["additions"]),
                    removals=float(raw["removals"]),
                    timing=timing,
                )
            elif "total_operations" in fields:
                degraded = True
                est = WorkloadEstimate(
                    initial=float(raw["total_operations"]),
                    additions=0.0,
                    removals=0.0,
                    timing=timing,
                )
            else:
                raise ParseError(f"{where}: need either component columns or total_operations")
        except (ValueError, KeyError) as exc:
            raise ParseError(f"{where}: bad value: {exc}") from exc
        points.append((f, est))
    if degraded:
        warnings.warn(
            "workload curve has totals only; time objective degenerates to a rescale",
            stacklevel=2,
        )
    points.sort(key=lambda pair: pair[0])
    return WorkloadCurve(tuple(points))
