import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dronewatch.errors import LengthMismatch, MissingScore
from dronewatch.imaging import Annotation, BoundingBox
from dronewatch.metrics import (PRCurve, SuccessCurve, auc, iou, pr_auc,
                                precision_recall, success_curve)


def raster_iou(a: BoundingBox, b: BoundingBox, step: float) -> float:
    """Cell-counting oracle; exact when all edges are multiples of step."""
    x0 = min(a.x, b.x)
    y0 = min(a.y, b.y)
    x1 = max(a.x2, b.x2)
    y1 = max(a.y2, b.y2)
    xs = np.arange(x0 + step / 2, x1, step)
    ys = np.arange(y0 + step / 2, y1, step)
    gx, gy = np.meshgrid(xs, ys)
    in_a = (gx > a.x) & (gx < a.x2) & (gy > a.y) & (gy < a.y2)
    in_b = (gx > b.x) & (gx < b.x2) & (gy > b.y) & (gy < b.y2)
    union = np.count_nonzero(in_a | in_b)
    return np.count_nonzero(in_a & in_b) / union if union else 0.0


def quantized_box(rng, q=64) -> BoundingBox:
    x = rng.integers(0, 10 * q) / q
    y = rng.integers(0, 10 * q) / q
    w = rng.integers(q // 2, 5 * q) / q
    h = rng.integers(q // 2, 5 * q) / q
    return BoundingBox(float(x), float(y), float(w), float(h))


class TestIoU:
    def test_identical(self):
        b = BoundingBox(3, 4, 10, 12)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 5, 5), BoundingBox(10, 10, 5, 5)) == 0.0

    def test_half_overlap(self):
        assert iou(BoundingBox(0, 0, 10, 10),
                   BoundingBox(5, 0, 10, 10)) == pytest.approx(50 / 150)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = quantized_box(rng), quantized_box(rng)
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0

    def test_matches_rasterization_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = quantized_box(rng), quantized_box(rng)
            assert iou(a, b) == pytest.approx(raster_iou(a, b, 1 / 64), abs=1e-3)

    def test_translating_away_never_increases(self):
        a = BoundingBox(0, 0, 10, 10)
        vals = [iou(a, BoundingBox(d, 0, 10, 10)) for d in range(0, 12)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))


class TestSuccessCurve:
    def test_perfect_prediction(self):
        gt = [BoundingBox(0, 0, 10, 10)] * 5
        curve = success_curve(list(gt), gt)
        assert curve.success_rate[:-1] == (1.0,) * 100
        assert curve.success_rate[-1] == 0.0  # strict inequality at t = 1.0

    def test_all_absent(self):
        gt = [BoundingBox(0, 0, 10, 10)] * 3
        curve = success_curve([None, None, None], gt)
        assert curve.success_rate == (0.0,) * 101

    def test_single_frame_half_iou(self):
        gt = [BoundingBox(0, 0, 10, 10)]
        pred = [BoundingBox(0, 0, 10, 5)]  # IoU exactly 0.5
        curve = success_curve(pred, gt)
        for t, r in zip(curve.thresholds, curve.success_rate):
            assert r == (1.0 if t < 0.5 else 0.0)

    def test_non_increasing(self, rng):
        n = 30
        gt = [BoundingBox(0, 0, 10, 10)] * n
        pred = [BoundingBox(float(rng.uniform(-5, 10)), 0, 10, 10) if rng.random() > 0.2
                else None for _ in range(n)]
        curve = success_curve(pred, gt)
        rates = curve.success_rate
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            success_curve([None], [BoundingBox(0, 0, 1, 1)] * 2)


class TestAuc:
    def test_constant_one(self):
        ts = tuple(t / 100 for t in range(101))
        assert auc(SuccessCurve(ts, (1.0,) * 101)) == pytest.approx(1.0)

    def test_constant_zero(self):
        ts = tuple(t / 100 for t in range(101))
        assert auc(SuccessCurve(ts, (0.0,) * 101)) == 0.0

    def test_step_curve(self):
        ts = tuple(t / 100 for t in range(101))
        rates = tuple(1.0 if t < 0.5 else 0.0 for t in ts)
        assert auc(SuccessCurve(ts, rates)) == pytest.approx(0.495)

    def test_linear_in_level(self):
        ts = tuple(t / 100 for t in range(101))
        for c in (0.25, 0.6):
            assert auc(SuccessCurve(ts, (c,) * 101)) == pytest.approx(c)


class TestPrecisionRecall:
    def test_perfect_detector(self):
        gt = [Annotation(i, BoundingBox(0, 0, 10, 10)) for i in range(4)]
        dets = [Annotation(i, BoundingBox(0, 0, 10, 10), score=1.0) for i in range(4)]
        curve = precision_recall(dets, gt)
        assert curve.points[-1] == (1.0, 1.0)
        assert all(p == 1.0 for _, p in curve.points)

    def test_no_detections(self):
        gt = [Annotation(0, BoundingBox(0, 0, 10, 10))]
        curve = precision_recall([], gt)
        assert curve.points == ()
        assert pr_auc(curve) == 0.0

    def test_hand_sweep(self):
        gt = [Annotation(0, BoundingBox(0, 0, 10, 10)),
              Annotation(1, BoundingBox(0, 0, 10, 10))]
        dets = [Annotation(0, BoundingBox(0, 0, 10, 10), score=0.9),
                Annotation(0, BoundingBox(50, 50, 10, 10), score=0.8),
                Annotation(1, BoundingBox(1, 0, 10, 10), score=0.7)]
        curve = precision_recall(dets, gt)
        assert curve.points == ((0.5, 1.0), (0.5, 0.5), (1.0, pytest.approx(2 / 3)))

    def test_gt_matched_once(self):
        gt = [Annotation(0, BoundingBox(0, 0, 10, 10))]
        dets = [Annotation(0, BoundingBox(0, 0, 10, 10), score=0.9),
                Annotation(0, BoundingBox(0, 0, 10, 10), score=0.8)]
        curve = precision_recall(dets, gt)
        assert curve.points == ((1.0, 1.0), (1.0, 0.5))

    def test_missing_score(self):
        gt = [Annotation(0, BoundingBox(0, 0, 10, 10))]
        with pytest.raises(MissingScore):
            precision_recall([Annotation(0, BoundingBox(0, 0, 10, 10))], gt)


class TestPrAuc:
    def test_single_perfect_point(self):
        assert pr_auc(PRCurve(points=((1.0, 1.0),))) == pytest.approx(1.0)

    def test_three_point_curve(self):
        curve = PRCurve(points=((0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)))
        # head segment (0,1)->(0.5,1) = 0.5, then 0, then (0.5+2/3)/2 * 0.5
        assert pr_auc(curve) == pytest.approx(0.5 + (0.5 + 2 / 3) / 4)
