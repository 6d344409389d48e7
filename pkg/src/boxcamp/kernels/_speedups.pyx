# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled matching kernels.

Mirrors ``_pure.py`` exactly: same arithmetic, same tie-breaks (highest
IoU >= tau wins, lowest gt index on ties), so both backends return
bit-identical results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def iou_matrix(a, b):
    """Pairwise IoU between two (n, 4) arrays of (x, y, w, h) boxes."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(
        np.asarray(a, dtype=np.float64).reshape(-1, 4))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(
        np.asarray(b, dtype=np.float64).reshape(-1, 4))
    cdef Py_ssize_t n = aa.shape[0], m = bb.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double ax1, ay1, ax2, ay2, area_a
    cdef double bx1, by1, bx2, by2
    cdef double iw, ih, inter, union
    # areas derive from the same corner values as the intersection, matching
    # _pure.iou_matrix bit for bit and keeping results in [0, 1] exactly
    for i in range(n):
        ax1 = aa[i, 0]
        ay1 = aa[i, 1]
        ax2 = ax1 + aa[i, 2]
        ay2 = ay1 + aa[i, 3]
        area_a = (ax2 - ax1) * (ay2 - ay1)
        for j in range(m):
            bx1 = bb[j, 0]
            by1 = bb[j, 1]
            bx2 = bx1 + bb[j, 2]
            by2 = by1 + bb[j, 3]
            iw = (ax2 if ax2 < bx2 else bx2) - (ax1 if ax1 > bx1 else bx1)
            if iw <= 0:
                continue
            ih = (ay2 if ay2 < by2 else by2) - (ay1 if ay1 > by1 else by1)
            if ih <= 0:
                continue
            inter = iw * ih
            union = area_a + (bx2 - bx1) * (by2 - by1) - inter
            out[i, j] = inter / union
    return out


def greedy_assign(ious, det_order, det_categories, gt_categories,
                  double tau, bint class_aware):
    """Greedy detection-to-ground-truth assignment; see ``_pure.greedy_assign``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mat = np.ascontiguousarray(
        np.asarray(ious, dtype=np.float64))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.ascontiguousarray(
        np.asarray(det_order, dtype=np.int64))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dcat = np.ascontiguousarray(
        np.asarray(det_categories, dtype=np.int64))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] gcat = np.ascontiguousarray(
        np.asarray(gt_categories, dtype=np.int64))
    cdef Py_ssize_t n_det = mat.shape[0], n_gt = mat.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] assigned = np.full(n_det, -1, dtype=np.int64)
    if n_gt == 0:
        return assigned
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] taken = np.zeros(n_gt, dtype=np.uint8)
    cdef Py_ssize_t k, d, g, best
    cdef double best_iou, v
    for k in range(order.shape[0]):
        d = order[k]
        best = -1
        best_iou = -1.0
        for g in range(n_gt):
            if taken[g]:
                continue
            if class_aware and gcat[g] != dcat[d]:
                continue
            v = mat[d, g]
            if v > best_iou:
                best = g
                best_iou = v
        if best >= 0 and best_iou >= tau:
            assigned[d] = best
            taken[best] = 1
    return assigned
