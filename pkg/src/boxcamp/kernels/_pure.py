"""Pure-Python/numpy backend for the matching kernels.

Semantically identical to the compiled backend in ``_speedups.pyx``; used
whenever the extension is unavailable. Both backends must keep the exact
same tie-break rules (detections claim the unmatched ground-truth box with
the highest IoU >= tau, first index wins ties) so results are bit-equal.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two (n, 4) arrays of (x, y, w, h) boxes.

    Areas are derived from the same corner values as the intersection so
    the result stays in [0, 1] exactly (x + w - x != w in floats).
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]

    iw = np.minimum(ax2, bx2[None, :]) - np.maximum(ax1, bx1[None, :])
    ih = np.minimum(ay2, by2[None, :]) - np.maximum(ay1, by1[None, :])
    iw = np.clip(iw, 0.0, None)
    ih = np.clip(ih, 0.0, None)
    inter = iw * ih

    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=inter > 0)
    return out


def greedy_assign(
    ious: np.ndarray,
    det_order: np.ndarray,
    det_categories: np.ndarray,
    gt_categories: np.ndarray,
    tau: float,
    class_aware: bool,
) -> np.ndarray:
    """Greedy detection-to-ground-truth assignment.

    ``ious`` is the (n_det, n_gt) overlap matrix; detections are visited in
    ``det_order`` (already score-descending). Returns an int64 array mapping
    each detection index to its claimed gt index, or -1 for unmatched.
    """
    ious = np.asarray(ious, dtype=np.float64)
    n_det, n_gt = ious.shape
    assigned = np.full(n_det, -1, dtype=np.int64)
    if n_gt == 0:
        return assigned
    taken = np.zeros(n_gt, dtype=bool)
    for d in np.asarray(det_order, dtype=np.int64):
        row = ious[d]
        blocked = taken.copy()
        if class_aware:
            blocked |= gt_categories != det_categories[d]
        candidates = np.where(blocked, -1.0, row)
        g = int(np.argmax(candidates))  # argmax takes the first max: lowest index wins ties
        if candidates[g] >= tau:
            assigned[d] = g
            taken[g] = True
    return assigned
