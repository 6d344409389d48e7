"""Greedy IoU matching between ground truth and detections.

Detections are processed in descending score order (ties keep input order);
each claims the unmatched ground-truth box of its own category with the
highest IoU at or above the threshold, lowest gt index winning ties.
Leftover detections are false positives, leftover ground truth false
negatives. Deterministic for a fixed input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from boxcamp import kernels
from boxcamp.errors import ValidationError
from boxcamp.geometry import LabeledBox

__all__ = ["MatchConfig", "MatchResult", "MatchReport", "match_image", "report"]


@dataclass(frozen=True)
class MatchConfig:
    iou_threshold: float = 0.5
    score_threshold: float = 0.5
    class_aware: bool = True

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValidationError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValidationError(f"score_threshold must lie in [0, 1], got {self.score_threshold}")


@dataclass(frozen=True)
class MatchResult:
    """Per-image assignment: indices refer to the input gt/detection lists."""

    matched_pairs: tuple[tuple[int, int, float], ...]  # (gt index, det index, iou)
    false_positives: tuple[int, ...]  # det indices
    false_negatives: tuple[int, ...]  # gt indices

    @property
    def tp(self) -> int:
        return len(self.matched_pairs)

    @property
    def fp(self) -> int:
        return len(self.false_positives)

    @property
    def fn(self) -> int:
        return len(self.false_negatives)


@dataclass(frozen=True)
class MatchReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    precision_defined: bool
    recall_defined: bool


def _boxes_array(entries: Sequence[LabeledBox]) -> np.ndarray:
    return np.array([lb.box.as_xywh() for lb in entries], dtype=np.float64).reshape(-1, 4)


def match_image(
    gt: Sequence[LabeledBox],
    det: Sequence[LabeledBox],
    cfg: MatchConfig,
    *,
    apply_score_threshold: bool = False,
) -> MatchResult:
    """Match one image's detections against its ground truth.

    ``gt`` must be unscored and ``det`` scored. By default detections are
    assumed pre-filtered to the operating score threshold; pass
    ``apply_score_threshold=True`` to filter here (indices in the result
    still refer to the original ``det`` list).
    """
    for lb in gt:
        if lb.score is not None:
            raise ValidationError("ground-truth boxes must not carry scores")
    for lb in det:
        if lb.score is None:
            raise ValidationError("detections must carry scores")

    det_indices = list(range(len(det)))
    if apply_score_threshold:
        det_indices = [i for i in det_indices if det[i].score >= cfg.score_threshold]

    if not det_indices or not gt:
        return MatchResult(
            matched_pairs=(),
            false_positives=tuple(det_indices),
            false_negatives=tuple(range(len(gt))),
        )

    order = sorted(range(len(det_indices)), key=lambda k: -det[det_indices[k]].score)
    ious = kernels.iou_matrix(
        _boxes_array([det[i] for i in det_indices]), _boxes_array(gt)
    )
    assigned = kernels.greedy_assign(
        ious,
        np.asarray(order, dtype=np.int64),
        np.asarray([det[i].category_id for i in det_indices], dtype=np.int64),
        np.asarray([lb.category_id for lb in gt], dtype=np.int64),
        cfg.iou_threshold,
        cfg.class_aware,
    )

    matched = []
    false_positives = []
    for k, det_idx in enumerate(det_indices):
        g = int(assigned[k])
        if g >= 0:
            matched.append((g, det_idx, float(ious[k, g])))
        else:
            false_positives.append(det_idx)
    matched_gt = {g for g, _, _ in matched}
    false_negatives = [g for g in range(len(gt)) if g not in matched_gt]
    matched.sort(key=lambda pair: pair[0])
    return MatchResult(
        matched_pairs=tuple(matched),
        false_positives=tuple(false_positives),
        false_negatives=tuple(false_negatives),
    )


def report(results: Iterable[MatchResult]) -> MatchReport:
    """Aggregate per-image matches into precision/recall.

    Zero-denominator ratios are reported as 0 with the corresponding
    ``*_defined`` flag cleared, keeping downstream workload arithmetic total.
    """
    tp = fp = fn = 0
    for r in results:
        tp += r.tp
        fp += r.fp
        fn += r.fn
    precision_defined = (tp + fp) > 0
    recall_defined = (tp + fn) > 0
    return MatchReport(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=tp / (tp + fp) if precision_defined else 0.0,
        recall=tp / (tp + fn) if recall_defined else 0.0,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )
