from __future__ import annotations

import math
import random

import pytest

from boxcamp.errors import ExtrapolationError, ParseError, ValidationError
from boxcamp.splits import (
    QualityCurve,
    QualityPoint,
    WorkloadCurve,
    load_quality_curve,
    load_workload_curve_csv,
    optimum,
    saturating_quality,
    schedule,
    split,
    sweep,
    write_workload_curve_csv,
)
from boxcamp.synth import synthetic_dataset
from boxcamp.workload import TimingModel, WorkloadEstimate

from conftest import dataset, gt

TABLE_TOTALS = [
    (0.01, 1642), (0.02, 1118), (0.03, 970), (0.04, 915), (0.05, 943),
    (0.06, 863), (0.07, 938), (0.08, 979), (0.09, 931), (0.10, 963),
    (0.20, 1265), (0.40, 2016), (0.60, 2878), (0.80, 3704),
]


def totals_curve(pairs, timing=None):
    timing = timing or TimingModel()
    return WorkloadCurve(
        tuple((f, WorkloadEstimate(float(total), 0.0, 0.0, timing)) for f, total in pairs)
    )


class TestSchedule:
    def test_length_is_27(self):
        assert len(schedule()) == 27

    def test_contents(self):
        s = schedule()
        assert 0.04 in s and 0.95 in s
        assert 0.12 not in s
        assert s[0] == 0.01

    def test_strictly_increasing(self):
        s = schedule()
        assert all(b > a for a, b in zip(s, s[1:]))


class TestSplit:
    def test_full_fraction_empties_fold2(self, two_sequence_dataset):
        sp = split(two_sequence_dataset, 1.0)
        assert sp.fold2_image_ids == ()
        assert len(sp.fold1_image_ids) == 15

    def test_two_sequences_ceil(self, two_sequence_dataset):
        # sequences of 10 and 5 frames at f=0.2: ceil(2.0)=2 and ceil(1.0)=1
        sp = split(two_sequence_dataset, 0.2)
        assert sp.fold1_image_ids == (1, 2, 11)

    def test_first_frame_always_in_fold1(self, two_sequence_dataset):
        sp = split(two_sequence_dataset, 0.01)
        assert 1 in sp.fold1_image_ids  # first frame of sequence a
        assert 11 in sp.fold1_image_ids  # first frame of sequence b

    def test_three_frame_sequence_tiny_fraction(self):
        ds = synthetic_dataset(3, 0, n_sequences=1, seed=1)
        sp = split(ds, 0.01)
        assert len(sp.fold1_image_ids) == 1
        assert sp.fold1_image_ids[0] == ds.images[0].id

    def test_invalid_fraction_rejected(self, two_sequence_dataset):
        for f in (0.0, -0.5, 1.01):
            with pytest.raises(ValidationError):
                split(two_sequence_dataset, f)

    def test_empty_dataset_rejected(self):
        from boxcamp.dataio.types import AnnotationSet

        with pytest.raises(ValidationError):
            split(AnnotationSet([], {}, {}, {}), 0.5)

    def test_partition_property(self):
        ds = synthetic_dataset(73, 100, n_sequences=5, seed=2)
        all_ids = {im.id for im in ds.images}
        for f in schedule():
            sp = split(ds, f)
            fold1, fold2 = set(sp.fold1_image_ids), set(sp.fold2_image_ids)
            assert fold1 | fold2 == all_ids
            assert fold1 & fold2 == set()
            assert len(sp.fold1_image_ids) + len(sp.fold2_image_ids) == len(all_ids)

    def test_per_sequence_prefix_property(self):
        ds = synthetic_dataset(50, 0, n_sequences=4, seed=3)
        by_id = ds.image_by_id()
        for f in (0.05, 0.3, 0.7):
            sp = split(ds, f)
            fold1 = set(sp.fold1_image_ids)
            per_seq: dict[str, list[int]] = {}
            for im in ds.images:
                per_seq.setdefault(im.sequence_id, []).append(im.id)
            for seq, ids in per_seq.items():
                ids.sort(key=lambda i: by_id[i].frame_index)
                in_fold1 = [i in fold1 for i in ids]
                assert in_fold1[0], f"first frame of {seq} missing from fold1"
                assert in_fold1 == sorted(in_fold1, reverse=True), "fold1 must be a prefix"

    def test_monotone_nesting(self):
        ds = synthetic_dataset(64, 0, n_sequences=3, seed=4)
        s = schedule()
        previous = set()
        for f in s:
            fold1 = set(split(ds, f).fold1_image_ids)
            assert previous <= fold1
            previous = fold1

    def test_float_product_boundaries(self):
        # 0.07 * 100 floats slightly above 7.0; must still take 7 frames
        ds = synthetic_dataset(100, 0, n_sequences=1, seed=5)
        assert len(split(ds, 0.07).fold1_image_ids) == 7
        ds3 = synthetic_dataset(30, 0, n_sequences=1, seed=5)
        assert len(split(ds3, 0.1).fold1_image_ids) == 3


class TestQualityCurve:
    def test_interpolation(self):
        curve = QualityCurve(
            (QualityPoint(0.1, 0.5, 0.4), QualityPoint(0.3, 0.9, 0.8))
        )
        q = curve.at(0.2)
        assert q.precision == pytest.approx(0.7)
        assert q.recall == pytest.approx(0.6)

    def test_exact_point_returned(self):
        p = QualityPoint(0.1, 0.5, 0.4, detections=120.0)
        curve = QualityCurve((p, QualityPoint(0.2, 0.6, 0.5)))
        assert curve.at(0.1) is p

    def test_extrapolation_rejected(self):
        curve = QualityCurve((QualityPoint(0.1, 0.5, 0.4), QualityPoint(0.3, 0.9, 0.8)))
        with pytest.raises(ExtrapolationError):
            curve.at(0.05)
        with pytest.raises(ExtrapolationError):
            curve.at(0.4)

    def test_fractions_must_increase(self):
        with pytest.raises(ValidationError):
            QualityCurve((QualityPoint(0.2, 0.5, 0.5), QualityPoint(0.1, 0.5, 0.5)))

    def test_saturating_model_shape(self):
        curve = saturating_quality(0.03)
        values = [p.recall for p in curve.points]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert curve.at(0.08).recall > 0.9  # saturates fast

    def test_detection_counts_interpolated(self):
        curve = QualityCurve(
            (QualityPoint(0.1, 0.5, 0.5, detections=100.0),
             QualityPoint(0.2, 0.6, 0.6, detections=200.0))
        )
        assert curve.provides_detections
        assert curve.at(0.15).detections == pytest.approx(150.0)


class TestSweep:
    def test_perfect_quality_counts_fold1_boxes(self):
        ds = synthetic_dataset(40, 120, n_sequences=2, seed=6)
        fractions = [0.1, 0.3, 0.5, 0.9]
        curve = QualityCurve(tuple(QualityPoint(f, 1.0, 1.0) for f in fractions))
        wl = sweep(ds, curve, fractions=fractions)
        per_image = {im.id: len(ds.boxes[im.id]) for im in ds.images}
        values = []
        for f, est in wl.points:
            fold1 = split(ds, f).fold1_image_ids
            assert est.total_operations == sum(per_image[i] for i in fold1)
            assert est.corrections == 0
            values.append(est.total_operations)
        assert values == sorted(values)

    def test_zero_quality_costs_every_box(self):
        ds = synthetic_dataset(40, 120, n_sequences=2, seed=7)
        fractions = [0.1, 0.5, 0.9]
        curve = QualityCurve(tuple(QualityPoint(f, 0.0, 0.0) for f in fractions))
        wl = sweep(ds, curve, fractions=fractions)
        total = ds.total_boxes()
        for _, est in wl.points:
            assert est.removals == 0
            assert est.total_operations == pytest.approx(total)

    def test_saturating_curve_has_interior_minimum(self):
        ds = synthetic_dataset(2213, 4595, n_categories=7, n_sequences=6, seed=8)
        wl = sweep(ds, saturating_quality(0.03))
        # independent closed-form recomputation at every fraction
        per_image = {im.id: len(ds.boxes[im.id]) for im in ds.images}
        for f, est in wl.points:
            sp = split(ds, f)
            initial = sum(per_image[i] for i in sp.fold1_image_ids)
            objects = sum(per_image[i] for i in sp.fold2_image_ids)
            q = 1.0 - math.exp(-f / 0.03)
            additions = objects * (1.0 - q)
            removals = (objects * q / q if q > 0 else 0.0) * (1.0 - q) if q > 0 else 0.0
            assert est.initial == initial
            assert est.additions == pytest.approx(additions, rel=1e-12)
            assert est.removals == pytest.approx(objects * (1.0 - q) if q > 0 else 0.0, rel=1e-12)
        ops = [est.total_operations for _, est in wl.points]
        k = ops.index(min(ops))
        assert 0 < k < len(ops) - 1, "minimum must be interior"

    def test_missing_fraction_is_extrapolation_error(self):
        ds = synthetic_dataset(30, 60, seed=9)
        curve = QualityCurve((QualityPoint(0.3, 0.9, 0.9), QualityPoint(0.5, 0.95, 0.95)))
        with pytest.raises(ExtrapolationError):
            sweep(ds, curve)  # schedule starts at 0.01, below the hull

    def test_measured_detection_counts_override(self):
        ds = synthetic_dataset(30, 60, seed=10)
        fractions = [0.2]
        curve = QualityCurve((QualityPoint(0.2, 0.5, 0.5, detections=10.0),))
        wl = sweep(ds, curve, fractions=fractions)
        (_, est), = wl.points
        assert est.removals == pytest.approx(10.0 * 0.5)


class TestOptimum:
    def test_published_totals_minimum_at_six_percent(self):
        curve = totals_curve(TABLE_TOTALS)
        assert optimum(curve, "operations") == 0.06

    def test_strictly_increasing_picks_first(self):
        curve = totals_curve([(0.1, 10), (0.2, 20), (0.3, 30)])
        assert optimum(curve, "operations") == 0.1

    def test_tie_breaks_toward_smaller_fraction(self):
        curve = totals_curve([(0.1, 20), (0.2, 10), (0.3, 10)])
        assert optimum(curve, "operations") == 0.2

    def test_scale_invariance(self):
        curve = totals_curve(TABLE_TOTALS)
        scaled = totals_curve([(f, v * 3.5) for f, v in TABLE_TOTALS])
        assert optimum(curve, "operations") == optimum(scaled, "operations")

    def test_empty_curve_rejected(self):
        with pytest.raises(ValidationError):
            optimum(WorkloadCurve(()), "operations")
        with pytest.raises(ValidationError):
            optimum(totals_curve([(0.1, 5)]), "speed")


class TestCurveFiles:
    def test_quality_json_round_trip(self, tmp_path):
        path = tmp_path / "q.json"
        path.write_text(
            '[{"fraction": 0.1, "precision": 0.8, "recall": 0.7},'
            ' {"fraction": 0.2, "precision": 0.9, "recall": 0.85, "map": 0.8}]'
        )
        curve = load_quality_curve(path)
        assert len(curve.points) == 2
        assert curve.points[1].map_value == 0.8

    def test_quality_csv(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text(
            "fraction,precision,recall,detections\n0.1,0.8,0.7,100\n0.2,0.9,0.85,150\n"
        )
        curve = load_quality_curve(path)
        assert curve.provides_detections
        assert curve.points[0].detections == 100.0

    def test_quality_missing_column_rejected(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text("fraction,precision\n0.1,0.8\n")
        with pytest.raises(ParseError):
            load_quality_curve(path)

    def test_workload_csv_round_trip(self, tmp_path):
        ds = synthetic_dataset(30, 90, seed=11)
        fractions = [0.2, 0.5]
        curve = QualityCurve(tuple(QualityPoint(f, 0.9, 0.8) for f in fractions))
        wl = sweep(ds, curve, fractions=fractions)
        data = write_workload_curve_csv(wl)
        path = tmp_path / "wl.csv"
        path.write_bytes(data)
        back = load_workload_curve_csv(path)
        for (f1, e1), (f2, e2) in zip(wl.points, back.points):
            assert f1 == f2
            assert e1.initial == e2.initial
            assert e1.total_operations == pytest.approx(e2.total_operations, abs=1e-12)

    def test_totals_only_csv_loads_with_warning(self, tmp_path):
        path = tmp_path / "totals.csv"
        rows = "\n".join(f"{f},{v}" for f, v in TABLE_TOTALS)
        path.write_text("fraction,total_operations\n" + rows + "\n")
        with pytest.warns(UserWarning, match="totals only"):
            curve = load_workload_curve_csv(path)
        assert optimum(curve, "operations") == 0.06
