from __future__ import annotations

import random

import pytest

from boxcamp.errors import ValidationError
from boxcamp.geometry import BoundingBox, LabeledBox
from boxcamp.matching import MatchConfig, match_image, report

from conftest import det, gt


# --- independent reference ------------------------------------------------
# Nested-loop greedy matcher written against the stated rules only: score
# order (stable), highest IoU >= tau, lowest gt index on ties. No numpy,
# no shared code with the implementation under test.

def ref_iou(a: BoundingBox, b: BoundingBox) -> float:
    ix1, iy1 = max(a.x, b.x), max(a.y, b.y)
    ix2, iy2 = min(a.x + a.w, b.x + b.w), min(a.y + a.h, b.y + b.h)
    if ix2 <= ix1 or iy2 <= iy1:
        return 0.0
    inter = (ix2 - ix1) * (iy2 - iy1)
    return inter / (a.w * a.h + b.w * b.h - inter)


def ref_match(gt_boxes, det_boxes, tau=0.5, class_aware=True):
    order = sorted(range(len(det_boxes)), key=lambda i: (-det_boxes[i].score, i))
    taken = set()
    pairs = []
    for d in order:
        best_g, best_v = None, -1.0
        for g, glb in enumerate(gt_boxes):
            if g in taken:
                continue
            if class_aware and glb.category_id != det_boxes[d].category_id:
                continue
            v = ref_iou(det_boxes[d].box, glb.box)
            if v > best_v:
                best_g, best_v = g, v
        if best_g is not None and best_v >= tau:
            taken.add(best_g)
            pairs.append((best_g, d, best_v))
    fps = sorted(set(range(len(det_boxes))) - {d for _, d, _ in pairs})
    fns = sorted(set(range(len(gt_boxes))) - taken)
    return sorted(pairs, key=lambda p: p[0]), fps, fns


def random_instance(rng, max_gt=6, max_det=6, n_categories=2, grid=60):
    def rand_box():
        x, y = rng.uniform(0, grid), rng.uniform(0, grid)
        w, h = rng.uniform(4, 25), rng.uniform(4, 25)
        return BoundingBox(x, y, w, h)

    gt_boxes = [
        LabeledBox(rand_box(), rng.randint(1, n_categories))
        for _ in range(rng.randint(0, max_gt))
    ]
    det_boxes = []
    for _ in range(rng.randint(0, max_det)):
        if gt_boxes and rng.random() < 0.7:
            src = rng.choice(gt_boxes).box
            base = BoundingBox(
                max(0.0, src.x + rng.uniform(-6, 6)),
                max(0.0, src.y + rng.uniform(-6, 6)),
                max(1.0, src.w * rng.uniform(0.6, 1.4)),
                max(1.0, src.h * rng.uniform(0.6, 1.4)),
            )
        else:
            base = rand_box()
        det_boxes.append(
            LabeledBox(base, rng.randint(1, n_categories), round(rng.random(), 3))
        )
    return gt_boxes, det_boxes


# --- examples ---------------------------------------------------------------


class TestMatchImage:
    def test_identity_all_matched(self):
        boxes = [gt(0, 0, 10, 10), gt(50, 50, 20, 20, category=2)]
        dets = [det(0, 0, 10, 10, score=1.0), det(50, 50, 20, 20, category=2, score=1.0)]
        r = match_image(boxes, dets, MatchConfig())
        assert r.tp == 2 and r.fp == 0 and r.fn == 0

    def test_empty_detections_all_false_negatives(self):
        boxes = [gt(0, 0, 10, 10), gt(20, 0, 10, 10), gt(40, 0, 10, 10)]
        r = match_image(boxes, [], MatchConfig())
        assert r.tp == 0 and r.fp == 0
        assert r.false_negatives == (0, 1, 2)

    def test_matches_brute_force_on_crafted_overlaps(self):
        gt_boxes = [gt(0, 0, 10, 10), gt(8, 0, 10, 10)]
        det_boxes = [
            det(1, 0, 10, 10, score=0.9),
            det(7, 0, 10, 10, score=0.8),
            det(4, 0, 10, 10, score=0.7),
        ]
        r = match_image(gt_boxes, det_boxes, MatchConfig())
        pairs, fps, fns = ref_match(gt_boxes, det_boxes)
        assert [(g, d) for g, d, _ in r.matched_pairs] == [(g, d) for g, d, _ in pairs]
        assert list(r.false_positives) == fps
        assert list(r.false_negatives) == fns

    def test_gt_with_scores_rejected(self):
        with pytest.raises(ValidationError):
            match_image([det(0, 0, 10, 10)], [det(0, 0, 10, 10)], MatchConfig())

    def test_detections_without_scores_rejected(self):
        with pytest.raises(ValidationError):
            match_image([gt(0, 0, 10, 10)], [gt(0, 0, 10, 10)], MatchConfig())

    def test_score_threshold_filter(self):
        boxes = [gt(0, 0, 10, 10)]
        dets = [det(0, 0, 10, 10, score=0.4)]
        r = match_image(boxes, dets, MatchConfig(score_threshold=0.5),
                        apply_score_threshold=True)
        assert r.tp == 0 and r.fp == 0 and r.fn == 1

    def test_wrong_category_is_fp_and_fn(self):
        boxes = [gt(0, 0, 10, 10, category=1)]
        dets = [det(0, 0, 10, 10, category=2, score=0.9)]
        r = match_image(boxes, dets, MatchConfig())
        assert r.tp == 0 and r.fp == 1 and r.fn == 1
        r = match_image(boxes, dets, MatchConfig(class_aware=False))
        assert r.tp == 1

    def test_agrees_with_reference_on_random_instances(self):
        rng = random.Random(42)
        for _ in range(1000):
            gt_boxes, det_boxes = random_instance(rng)
            for class_aware in (True, False):
                cfg = MatchConfig(class_aware=class_aware)
                r = match_image(gt_boxes, det_boxes, cfg)
                pairs, fps, fns = ref_match(gt_boxes, det_boxes, 0.5, class_aware)
                assert [(g, d) for g, d, _ in r.matched_pairs] == [
                    (g, d) for g, d, _ in pairs
                ], (gt_boxes, det_boxes)
                assert list(r.false_positives) == fps
                assert list(r.false_negatives) == fns
                for (_, _, a), (_, _, b) in zip(r.matched_pairs, pairs):
                    assert a == pytest.approx(b, abs=1e-12)

    def test_counting_identities_on_random_instances(self):
        rng = random.Random(7)
        for _ in range(1000):
            gt_boxes, det_boxes = random_instance(rng)
            r = match_image(gt_boxes, det_boxes, MatchConfig())
            seen_gt = [g for g, _, _ in r.matched_pairs] + list(r.false_negatives)
            seen_det = [d for _, d, _ in r.matched_pairs] + list(r.false_positives)
            assert sorted(seen_gt) == list(range(len(gt_boxes)))
            assert sorted(seen_det) == list(range(len(det_boxes)))
            assert r.tp + r.fn == len(gt_boxes)
            assert r.tp + r.fp == len(det_boxes)

    def test_raising_tau_never_increases_tp(self):
        rng = random.Random(13)
        for _ in range(300):
            gt_boxes, det_boxes = random_instance(rng)
            tps = [
                match_image(gt_boxes, det_boxes, MatchConfig(iou_threshold=tau)).tp
                for tau in (0.3, 0.5, 0.7, 0.9)
            ]
            assert tps == sorted(tps, reverse=True)

    def test_raising_score_threshold_never_increases_considered(self):
        rng = random.Random(17)
        for _ in range(300):
            gt_boxes, det_boxes = random_instance(rng)
            considered = []
            for s in (0.0, 0.3, 0.6, 0.9):
                r = match_image(
                    gt_boxes, det_boxes, MatchConfig(score_threshold=s),
                    apply_score_threshold=True,
                )
                considered.append(r.tp + r.fp)
            assert considered == sorted(considered, reverse=True)

    def test_gt_permutation_invariance_without_iou_ties(self):
        gt_boxes = [gt(0, 0, 10, 10), gt(30, 0, 12, 12), gt(60, 0, 9, 9)]
        det_boxes = [det(1, 0, 10, 10, score=0.9), det(31, 0, 12, 12, score=0.8)]
        base = match_image(gt_boxes, det_boxes, MatchConfig())
        base_boxes = {tuple(gt_boxes[g].box.as_xywh()) for g, _, _ in base.matched_pairs}
        perm = [gt_boxes[2], gt_boxes[0], gt_boxes[1]]
        r = match_image(perm, det_boxes, MatchConfig())
        got = {tuple(perm[g].box.as_xywh()) for g, _, _ in r.matched_pairs}
        assert got == base_boxes


class TestReport:
    def test_precision_from_counts(self):
        boxes = [gt(i * 30, 0, 10, 10) for i in range(8)]
        dets = [det(i * 30, 0, 10, 10, score=0.9) for i in range(8)]
        dets += [det(i * 30, 500, 10, 10, score=0.9) for i in range(2)]
        rep = report([match_image(boxes, dets, MatchConfig())])
        assert rep.tp == 8 and rep.fp == 2
        assert rep.precision == pytest.approx(0.8)

    def test_recall_from_counts(self):
        boxes = [gt(i * 30, 0, 10, 10) for i in range(16)]
        dets = [det(i * 30, 0, 10, 10, score=0.9) for i in range(8)]
        rep = report([match_image(boxes, dets, MatchConfig())])
        assert rep.tp == 8 and rep.fn == 8
        assert rep.recall == pytest.approx(0.5)

    def test_empty_everything_flags_undefined(self):
        rep = report([match_image([], [], MatchConfig())])
        assert rep.precision == 0.0 and not rep.precision_defined
        assert rep.recall == 0.0 and not rep.recall_defined

    def test_aggregates_across_images(self):
        r1 = match_image([gt(0, 0, 10, 10)], [det(0, 0, 10, 10, score=0.9)], MatchConfig())
        r2 = match_image([gt(0, 0, 10, 10)], [], MatchConfig())
        rep = report([r1, r2])
        assert rep.tp == 1 and rep.fn == 1
        assert rep.recall == pytest.approx(0.5)
