"""Average precision and mAP at a single IoU threshold.

AP follows the fixed-level convention: detections for a category are pooled
across images, sorted by descending score, matched greedily per image, and
the precision/recall curve is summarized as the mean over the 101 recall
levels {0, 0.01, ..., 1.00} of the best precision achieved at or beyond
each level (0 where the level is unreachable). No intermediate curve
smoothing is applied beyond that running maximum. mAP averages AP over the
categories that have at least one ground-truth instance.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from boxcamp.dataio.types import AnnotationSet, DetectionSet
from boxcamp.errors import ReferentialIntegrityError, ValidationError
from boxcamp.geometry import LabeledBox
from boxcamp.matching import MatchConfig, match_image

__all__ = ["RECALL_LEVELS", "EvalReport", "average_precision", "evaluate"]

RECALL_LEVELS = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class EvalReport:
    per_category_ap: dict[int, float]
    map_value: float
    skipped_categories: tuple[int, ...] = ()

    def to_json(self, cfg: MatchConfig | None = None) -> bytes:
        doc = {
            "per_category_ap": {str(cid): ap for cid, ap in self.per_category_ap.items()},
            "map": self.map_value,
            "skipped_categories": list(self.skipped_categories),
        }
        if cfg is not None:
            doc["config"] = {
                "iou_threshold": cfg.iou_threshold,
                "score_threshold": cfg.score_threshold,
                "class_aware": cfg.class_aware,
            }
        return json.dumps(doc, indent=2).encode("utf-8") + b"\n"

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["category", "ap"])
        for cid in sorted(self.per_category_ap):
            writer.writerow([cid, repr(self.per_category_ap[cid])])
        writer.writerow(["mAP", repr(self.map_value)])
        return buf.getvalue().encode("utf-8")


def average_precision(
    gt_by_image: Mapping[int, Sequence[LabeledBox]],
    det_by_image: Mapping[int, Sequence[LabeledBox]],
    cfg: MatchConfig,
) -> float:
    """AP for one category given its per-image gt and scored detections.

    Detections are never score-filtered here: AP sweeps the score axis.
    Raises when the category has no ground truth (callers exclude such
    categories instead of scoring them).
    """
    total_gt = sum(len(v) for v in gt_by_image.values())
    if total_gt == 0:
        raise ValidationError("category has no ground-truth instances; excluded from AP")

    # Per-image greedy matching; an image's detections match independently
    # of other images, so cumulative TP/FP over the pooled score ordering
    # can be read off per-image results.
    tp_flags: list[tuple[float, int, int, bool]] = []  # (-score, image rank, det idx, tp)
    for rank, image_id in enumerate(sorted(det_by_image)):
        det = det_by_image[image_id]
        if not det:
            continue
        gt = gt_by_image.get(image_id, [])
        result = match_image(gt, det, cfg)
        matched_det = {d for _, d, _ in result.matched_pairs}
        for idx, lb in enumerate(det):
            tp_flags.append((-lb.score, rank, idx, idx in matched_det))

    if not tp_flags:
        return 0.0

    tp_flags.sort(key=lambda t: (t[0], t[1], t[2]))
    flags = np.array([t[3] for t in tp_flags], dtype=np.float64)
    cum_tp = np.cumsum(flags)
    cum_fp = np.cumsum(1.0 - flags)
    precisions = cum_tp / (cum_tp + cum_fp)
    recalls = cum_tp / total_gt

    ap = 0.0
    for level in RECALL_LEVELS:
        reachable = precisions[recalls >= level]
        if reachable.size:
            ap += float(reachable.max())
    return ap / len(RECALL_LEVELS)


def evaluate(gt: AnnotationSet, det: DetectionSet, cfg: MatchConfig) -> EvalReport:
    """Per-category AP and their mean over categories with ground truth."""
    known_images = {im.id for im in gt.images}
    unknown = sorted(set(det.boxes) - known_images)
    if unknown:
        raise ReferentialIntegrityError(
            f"detections reference unknown image ids: {unknown}", unknown
        )

    per_category: dict[int, float] = {}
    skipped: list[int] = []
    for cid in sorted(gt.categories):
        gt_by_image = {
            im.id: [lb for lb in gt.boxes.get(im.id, []) if lb.category_id == cid]
            for im in gt.images
        }
        if sum(len(v) for v in gt_by_image.values()) == 0:
            skipped.append(cid)
            continue
        det_by_image = {
            image_id: [lb for lb in entries if lb.category_id == cid]
            for image_id, entries in det.boxes.items()
        }
        per_category[cid] = average_precision(gt_by_image, det_by_image, cfg)

    if not per_category:
        raise ValidationError("no category has ground-truth instances; mAP undefined")
    map_value = sum(per_category.values()) / len(per_category)
    return EvalReport(per_category_ap=per_category, map_value=map_value, skipped_categories=tuple(skipped))
