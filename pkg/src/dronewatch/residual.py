"""Residual-frame preprocessing: per-channel absolute frame differencing with
optional global translation compensation (exhaustive SAD block search).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .imaging import Image


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[Image, ...]
    fps: float = 30.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("sequence must contain at least one frame")
        shape = frames[0].pixels.shape
        for i, f in enumerate(frames):
            if f.pixels.shape != shape:
                raise DimensionMismatch(
                    f"frame {i} shape {f.pixels.shape} differs from {shape}"
                )
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)


def _check_dims(cur: Image, prev: Image) -> None:
    if cur.pixels.shape != prev.pixels.shape:
        raise DimensionMismatch(
            f"frames differ: {cur.pixels.shape} vs {prev.pixels.shape}"
        )


def residual_frame(cur: Image, prev: Image) -> Image:
    """Pixelwise |cur - prev| in signed arithmetic, per channel."""
    _check_dims(cur, prev)
    diff = np.abs(cur.pixels.astype(np.int16) - prev.pixels.astype(np.int16))
    return Image(diff.astype(np.uint8))


def estimate_global_translation(cur: Image, prev: Image,
                                radius: int) -> tuple[int, int]:
    """Integer (dx, dy) in [-radius, radius]^2 minimizing the mean absolute
    difference between cur and prev shifted by (dx, dy), evaluated on the
    overlap. Ties: smallest |dx|+|dy|, then lexicographic (dx, dy).
    """
    _check_dims(cur, prev)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return (0, 0)
    c = cur.pixels.astype(np.int32)
    p = prev.pixels.astype(np.int32)
    h, w = c.shape[:2]
    best = None
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            # shifted prev: value at (y, x) comes from prev[y - dy, x - dx]
            cy0, cy1 = max(dy, 0), min(h + dy, h)
            cx0, cx1 = max(dx, 0), min(w + dx, w)
            if cy1 <= cy0 or cx1 <= cx0:
                continue
            cur_win = c[cy0:cy1, cx0:cx1]
            prev_win = p[cy0 - dy : cy1 - dy, cx0 - dx : cx1 - dx]
            sad = float(np.mean(np.abs(cur_win - prev_win)))
            key = (sad, abs(dx) + abs(dy), dx, dy)
            if best is None or key < best[0]:
                best = (key, (dx, dy))
    return best[1]


def _shift_with_cur_fill(prev: Image, cur: Image, dx: int, dy: int) -> np.ndarray:
    """prev shifted by (dx, dy); samples leaving the frame are replaced by the
    corresponding cur pixels so they contribute zero residual."""
    out = cur.pixels.copy()
    h, w = out.shape[:2]
    cy0, cy1 = max(dy, 0), min(h + dy, h)
    cx0, cx1 = max(dx, 0), min(w + dx, w)
    if cy1 > cy0 and cx1 > cx0:
        out[cy0:cy1, cx0:cx1] = prev.pixels[cy0 - dy : cy1 - dy, cx0 - dx : cx1 - dx]
    return out


def residual_sequence(seq: FrameSequence, compensate: bool = False,
                      radius: int = 5,
                      shifts_out: list | None = None) -> FrameSequence:
    """Residual of each frame against its (optionally motion-compensated)
    predecessor; the first output frame is all zero. When shifts_out is a
    list, the per-frame (dx, dy) are appended to it."""
    first = Image(np.zeros_like(seq.frames[0].pixels))
    out = [first]
    if shifts_out is not None:
        shifts_out.append((0, 0))
    for t in range(1, len(seq)):
        cur, prev = seq.frames[t], seq.frames[t - 1]
        if compensate:
            dx, dy = estimate_global_translation(cur, prev, radius)
            shifted = Image(_shift_with_cur_fill(prev, cur, dx, dy))
        else:
            dx, dy = 0, 0
            shifted = prev
        if shifts_out is not None:
            shifts_out.append((dx, dy))
        out.append(residual_frame(cur, shifted))
    return FrameSequence(frames=tuple(out), fps=seq.fps)
