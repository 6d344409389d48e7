"""Both kernel backends must agree bit-for-bit."""

from __future__ import annotations

import numpy as np
import pytest

from boxcamp import kernels
from boxcamp.kernels import _pure


def random_boxes(rng, n):
    xy = rng.uniform(0, 500, size=(n, 2))
    wh = rng.uniform(1, 200, size=(n, 2))
    return np.hstack([xy, wh])


def test_pure_iou_matrix_known_values():
    a = np.array([[0, 0, 10, 10]], dtype=float)
    b = np.array([[5, 0, 10, 10], [20, 20, 5, 5], [0, 0, 10, 10]], dtype=float)
    out = _pure.iou_matrix(a, b)
    assert out.shape == (1, 3)
    assert out[0, 0] == pytest.approx(1 / 3, abs=1e-12)
    assert out[0, 1] == 0.0
    assert out[0, 2] == 1.0


def test_pure_greedy_prefers_highest_iou_then_lowest_index():
    ious = np.array([[0.6, 0.6, 0.9]])
    out = _pure.greedy_assign(
        ious, np.array([0]), np.array([1]), np.array([1, 1, 1]), 0.5, True
    )
    assert out.tolist() == [2]
    # tie between gt 0 and 1: lowest index wins
    ious = np.array([[0.6, 0.6, 0.3]])
    out = _pure.greedy_assign(
        ious, np.array([0]), np.array([1]), np.array([1, 1, 1]), 0.5, True
    )
    assert out.tolist() == [0]


def test_pure_greedy_respects_categories_and_threshold():
    ious = np.array([[0.9], [0.9]])
    out = _pure.greedy_assign(
        ious, np.array([0, 1]), np.array([1, 2]), np.array([2]), 0.5, True
    )
    assert out.tolist() == [-1, 0]
    out = _pure.greedy_assign(
        ious, np.array([0, 1]), np.array([1, 2]), np.array([2]), 0.95, True
    )
    assert out.tolist() == [-1, -1]


@pytest.mark.skipif(kernels.backend() != "compiled", reason="extension not built")
class TestBackendEquivalence:
    def test_iou_matrix_bit_equal(self):
        rng = np.random.default_rng(7)
        compiled = kernels.available_backends()["compiled"]
        for n, m in [(0, 3), (1, 1), (5, 7), (40, 60)]:
            a, b = random_boxes(rng, n), random_boxes(rng, m)
            pure = _pure.iou_matrix(a, b)
            fast = compiled.iou_matrix(a, b)
            assert pure.shape == fast.shape
            assert np.array_equal(pure, fast)

    def test_greedy_assign_identical(self):
        rng = np.random.default_rng(11)
        compiled = kernels.available_backends()["compiled"]
        for trial in range(200):
            n_det = int(rng.integers(0, 12))
            n_gt = int(rng.integers(0, 12))
            ious = rng.uniform(0, 1, size=(n_det, n_gt))
            order = rng.permutation(n_det).astype(np.int64)
            det_cat = rng.integers(1, 4, size=n_det)
            gt_cat = rng.integers(1, 4, size=n_gt)
            for class_aware in (True, False):
                a = _pure.greedy_assign(ious, order, det_cat, gt_cat, 0.5, class_aware)
                b = compiled.greedy_assign(ious, order, det_cat, gt_cat, 0.5, class_aware)
                assert np.array_equal(a, b)

    def test_active_backend_is_compiled(self):
        assert kernels.backend() == "compiled"
