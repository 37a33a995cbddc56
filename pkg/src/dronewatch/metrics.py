"""Evaluation metrics: IoU, success-rate curves with AUC for tracking, and
precision-recall curves with AUC for detection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import LengthMismatch, MissingScore
from .imaging import Annotation, BoundingBox

DEFAULT_THRESHOLDS = tuple(round(t * 0.01, 2) for t in range(101))


@dataclass(frozen=True)
class SuccessCurve:
    thresholds: tuple[float, ...]
    success_rate: tuple[float, ...]

    def __post_init__(self):
        if len(self.thresholds) != len(self.success_rate):
            raise LengthMismatch("thresholds and rates differ in length")
        if any(b < a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be ascending")


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) points ordered by descending score threshold."""

    points: tuple[tuple[float, float], ...]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; disjoint boxes give 0."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area() + b.area() - inter)


def success_curve(pred: Sequence[Optional[BoundingBox]],
                  gt: Sequence[BoundingBox],
                  thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> SuccessCurve:
    """Per frame, success at threshold t is 1 iff a prediction exists and its
    IoU with the ground truth is strictly greater than t. Frames without a
    prediction count as failures at every threshold."""
    if len(pred) != len(gt):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gt)} ground truths")
    ious = np.array([iou(p, g) if p is not None else -1.0
                     for p, g in zip(pred, gt)])
    n = len(gt)
    rates = tuple(float(np.count_nonzero(ious > t)) / n for t in thresholds)
    return SuccessCurve(thresholds=tuple(thresholds), success_rate=rates)


def auc(curve: SuccessCurve) -> float:
    """Trapezoidal integral of the success rate over threshold in [0, 1]."""
    return float(np.trapezoid(curve.success_rate, curve.thresholds))


def precision_recall(dets: Sequence[Annotation], gt: Sequence[Annotation],
                     iou_thresh: float = 0.5) -> PRCurve:
    """Single-class sweep: detections sorted by descending score; each is a
    true positive if it overlaps an unmatched same-frame ground-truth box with
    IoU > iou_thresh (greedy best-IoU matching, each gt used once)."""
    for d in dets:
        if d.score is None:
            raise MissingScore(f"detection at frame {d.frame} has no score")
    n_gt = len(gt)
    gt_by_frame: dict[int, list[BoundingBox]] = {}
    for g in gt:
        gt_by_frame.setdefault(g.frame, []).append(g.box)
    matched: dict[int, list[bool]] = {f: [False] * len(boxes)
                                      for f, boxes in gt_by_frame.items()}
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    points = []
    tp = 0
    for rank, i in enumerate(order, start=1):
        d = dets[i]
        boxes = gt_by_frame.get(d.frame, [])
        best_j, best_iou = -1, iou_thresh
        for j, gbox in enumerate(boxes):
            if matched[d.frame][j]:
                continue
            v = iou(d.box, gbox)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0:
            matched[d.frame][best_j] = True
            tp += 1
        recall = tp / n_gt if n_gt else 0.0
        points.append((recall, tp / rank))
    return PRCurve(points=tuple(points))


def pr_auc(curve: PRCurve) -> float:
    """Trapezoid over recall, after prepending (0, p0) with p0 the first
    precision value. Empty curves score 0."""
    if not curve.points:
        return 0.0
    pts = [(0.0, curve.points[0][1])] + list(curve.points)
    area = 0.0
    for (r0, p0), (r1, p1) in zip(pts, pts[1:]):
        area += (r1 - r0) * (p0 + p1) / 2.0
    return area
