"""Integrated detection-tracking engine: sigmoid score calibration, max/argmax
candidate fusion with rejection, and the monitoring state machine with
periodic detector re-initialization. Ships deterministic simulated detector
and tracker models for closed-loop testing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import BadParams, UpdateBeforeInit
from .imaging import Annotation, BoundingBox, Image, clamp_box
from .metrics import iou


@dataclass(frozen=True)
class CalibrationParams:
    """Sigmoid slopes/midpoints for the detector (1) and tracker (2) channels."""

    beta1: float = 10.0
    alpha1: float = 0.5
    beta2: float = 10.0
    alpha2: float = 0.5

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise BadParams("beta parameters must be positive")


@dataclass(frozen=True)
class Candidate:
    box: BoundingBox
    s_d: Optional[float] = None  # raw detector score
    s_t: Optional[float] = None  # raw tracker score

    def __post_init__(self):
        if self.s_d is None and self.s_t is None:
            raise ValueError("candidate needs at least one channel score")


class Channel(Enum):
    DETECTOR = "detector"
    TRACKER = "tracker"


@dataclass(frozen=True)
class FusionResult:
    box: BoundingBox
    s_fused: float
    winning_channel: Channel
    index: int


@dataclass(frozen=True)
class MonitorConfig:
    detect_every_n: int = 10
    reinit_threshold: float = 0.5  # raw detector score
    reject_epsilon: float = 0.05   # calibrated-score floor
    lost_patience: int = 30

    def __post_init__(self):
        if self.detect_every_n < 1:
            raise BadParams("detect_every_n must be >= 1")
        if not (0.0 <= self.reject_epsilon < 1.0):
            raise BadParams("reject_epsilon must lie in [0, 1)")

    @classmethod
    def from_dict(cls, raw: dict) -> "MonitorConfig":
        keys = {k: raw[k] for k in cls.__dataclass_fields__ if k in raw}
        return cls(**keys)


class Mode(Enum):
    SEARCHING = "searching"
    TRACKING = "tracking"
    LOST = "lost"


@dataclass(frozen=True)
class TrackState:
    mode: Mode = Mode.SEARCHING
    current_box: Optional[BoundingBox] = None
    frames_since_confident: int = 0

    def __post_init__(self):
        if self.mode == Mode.TRACKING and self.current_box is None:
            raise ValueError("tracking state requires a current box")


class DetectorIface(Protocol):
    def detect(self, frame_idx: int, frame: Image) -> list[tuple[BoundingBox, float]]: ...
    def score_at(self, frame_idx: int, frame: Image, box: BoundingBox) -> float: ...


class TrackerIface(Protocol):
    def init(self, frame_idx: int, frame: Image, box: BoundingBox) -> None: ...
    def update(self, frame_idx: int, frame: Image) -> tuple[BoundingBox, float]: ...


def calibrate(s: float, beta: float, alpha: float) -> float:
    """Sigmoid calibration 1 / (1 + exp(-beta (s - alpha))); midpoint at alpha."""
    if beta <= 0:
        raise BadParams(f"beta must be positive, got {beta}")
    if not math.isfinite(s):
        raise BadParams(f"score must be finite, got {s}")
    z = -beta * (s - alpha)
    if z > 700.0:
        return 0.0 if z > 745.0 else 1.0 / (1.0 + math.exp(z))
    return 1.0 / (1.0 + math.exp(z))


def fused_score(c: Candidate, params: CalibrationParams) -> float:
    """max of the calibrated channel scores; missing channels are absent."""
    scores = []
    if c.s_d is not None:
        scores.append(calibrate(c.s_d, params.beta1, params.alpha1))
    if c.s_t is not None:
        scores.append(calibrate(c.s_t, params.beta2, params.alpha2))
    return max(scores)


def fuse(cands: Sequence[Candidate], params: CalibrationParams,
         reject_epsilon: float = 0.05) -> Optional[FusionResult]:
    """Pick the candidate with the highest calibrated score (lowest index on
    ties). Returns None -- a rejection -- for an empty set or when the best
    score does not clear the floor."""
    if not cands:
        return None
    best_idx, best_score, best_channel = -1, -math.inf, Channel.DETECTOR
    for i, c in enumerate(cands):
        s = fused_score(c, params)
        if s > best_score:
            s_d = calibrate(c.s_d, params.beta1, params.alpha1) if c.s_d is not None else -math.inf
            channel = Channel.DETECTOR if s_d == s else Channel.TRACKER
            best_idx, best_score, best_channel = i, s, channel
    if best_score <= reject_epsilon:
        return None
    return FusionResult(box=cands[best_idx].box, s_fused=best_score,
                        winning_channel=best_channel, index=best_idx)


def monitor_step(state: TrackState, frame_idx: int, frame: Image,
                 det: DetectorIface, trk: TrackerIface,
                 params: CalibrationParams,
                 cfg: MonitorConfig) -> tuple[TrackState, Optional[Annotation]]:
    """One tick of the monitoring state machine; see run_monitor."""
    if state.mode == Mode.SEARCHING:
        detections = det.detect(frame_idx, frame)
        if detections:
            box, raw = max(detections, key=lambda d: d[1])
            if raw > cfg.reinit_threshold:
                trk.init(frame_idx, frame, box)
                ann = Annotation(frame=frame_idx, box=box,
                                 score=_unit(calibrate(raw, params.beta1, params.alpha1)))
                return TrackState(Mode.TRACKING, box, 0), ann
        return state, None

    # Tracking or Lost: keep the tracker in the loop
    trk_box, s_t = trk.update(frame_idx, frame)
    detection_frame = frame_idx % cfg.detect_every_n == 0

    if detection_frame:
        detections = det.detect(frame_idx, frame)
        cands = [Candidate(box=b, s_d=s) for b, s in detections]
        cands.append(Candidate(box=trk_box, s_t=s_t))
        result = fuse(cands, params, cfg.reject_epsilon)
        if result is not None and result.index < len(detections):
            raw_det = detections[result.index][1]
            if raw_det > cfg.reinit_threshold:
                trk.init(frame_idx, frame, result.box)
    else:
        s_d = det.score_at(frame_idx, frame, trk_box)
        result = fuse([Candidate(box=trk_box, s_d=s_d, s_t=s_t)],
                      params, cfg.reject_epsilon)

    if result is None:
        misses = state.frames_since_confident + 1
        if misses >= cfg.lost_patience:
            return TrackState(Mode.SEARCHING, None, 0), None
        return TrackState(Mode.LOST, state.current_box, misses), None

    ann = Annotation(frame=frame_idx, box=result.box, score=_unit(result.s_fused))
    return TrackState(Mode.TRACKING, result.box, 0), ann


def _unit(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def run_monitor(frames: Sequence[Image], det: DetectorIface, trk: TrackerIface,
                params: CalibrationParams,
                cfg: MonitorConfig) -> list[Annotation]:
    """Fold monitor_step over the sequence, starting in Searching. At most one
    annotation per frame; boxes are clamped to the frame rectangle."""
    if not frames:
        raise ValueError("sequence must be nonempty")
    state = TrackState()
    out: list[Annotation] = []
    width, height = frames[0].width, frames[0].height
    for idx, frame in enumerate(frames):
        state, ann = monitor_step(state, idx, frame, det, trk, params, cfg)
        if ann is not None:
            out.append(replace(ann, box=clamp_box(ann.box, width, height)))
    return out


# ---------------------------------------------------------------------------
# Simulated models: deterministic stand-ins for a CNN detector and tracker.
# ---------------------------------------------------------------------------

def _gt_by_frame(gt: Sequence[Annotation]) -> dict[int, BoundingBox]:
    return {a.frame: a.box for a in gt}


class SimulatedDetector:
    """Ground-truth driven detector with configurable miss rate, false
    positives (Poisson per frame) and localization noise. All randomness is a
    pure function of (seed, frame index), so the call pattern cannot change
    the outputs."""

    def __init__(self, gt: Sequence[Annotation], miss_rate: float = 0.0,
                 fp_rate: float = 0.0, loc_noise_sigma: float = 0.0,
                 seed: int = 0):
        self._gt = _gt_by_frame(gt)
        self.miss_rate = miss_rate
        self.fp_rate = fp_rate
        self.loc_noise_sigma = loc_noise_sigma
        self.seed = seed

    def _rng(self, frame_idx: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, 0xD37EC7, frame_idx])

    def detect(self, frame_idx: int, frame: Image) -> list[tuple[BoundingBox, float]]:
        rng = self._rng(frame_idx)
        out: list[tuple[BoundingBox, float]] = []
        gt_box = self._gt.get(frame_idx)
        if gt_box is not None and rng.random() >= self.miss_rate:
            if self.loc_noise_sigma > 0:
                jitter = rng.normal(0.0, self.loc_noise_sigma, size=2)
                noisy = BoundingBox(gt_box.x + jitter[0], gt_box.y + jitter[1],
                                    gt_box.w, gt_box.h)
                score = min(1.0, max(0.0, iou(noisy, gt_box) + rng.normal(0.0, 0.01)))
            else:
                noisy = gt_box
                score = 1.0
            out.append((noisy, score))
        n_fp = int(rng.poisson(self.fp_rate))
        for _ in range(n_fp):
            w = float(rng.uniform(8, 40))
            h = float(rng.uniform(8, 40))
            x = float(rng.uniform(0, max(frame.width - w, 1)))
            y = float(rng.uniform(0, max(frame.height - h, 1)))
            out.append((BoundingBox(x, y, w, h), float(rng.uniform(0.0, 0.4))))
        return out

    def score_at(self, frame_idx: int, frame: Image, box: BoundingBox) -> float:
        gt_box = self._gt.get(frame_idx)
        if gt_box is None:
            return 0.0
        return iou(box, gt_box)


class SimulatedTracker:
    """Follows the ground truth with accumulating random drift; inside loss
    windows it returns the stale box with a score that halves each frame."""

    def __init__(self, gt: Sequence[Annotation], drift_per_frame: float = 0.0,
                 loss_events: Sequence[tuple[int, int]] = (), seed: int = 0):
        self._gt = _gt_by_frame(gt)
        self.drift_per_frame = drift_per_frame
        self.loss_events = tuple(loss_events)
        self.seed = seed
        self._box: Optional[BoundingBox] = None
        self._drift = np.zeros(2)
        self._loss_frames = 0

    def _rng(self, frame_idx: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, 0x7AC4E2, frame_idx])

    def _in_loss(self, frame_idx: int) -> bool:
        return any(start <= frame_idx < end for start, end in self.loss_events)

    def init(self, frame_idx: int, frame: Image, box: BoundingBox) -> None:
        self._box = box
        self._drift = np.zeros(2)
        self._loss_frames = 0

    def update(self, frame_idx: int, frame: Image) -> tuple[BoundingBox, float]:
        if self._box is None:
            raise UpdateBeforeInit("tracker update() called before init()")
        gt_box = self._gt.get(frame_idx)
        if self._in_loss(frame_idx) or gt_box is None:
            self._loss_frames += 1
            score = 0.5 ** self._loss_frames
            return self._box, score
        self._loss_frames = 0
        if self.drift_per_frame > 0:
            self._drift = self._drift + self._rng(frame_idx).normal(
                0.0, self.drift_per_frame, size=2)
        box = BoundingBox(gt_box.x + self._drift[0], gt_box.y + self._drift[1],
                          gt_box.w, gt_box.h)
        self._box = box
        return box, max(0.0, min(1.0, iou(box, gt_box)))
