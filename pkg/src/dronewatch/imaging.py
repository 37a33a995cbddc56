"""Raster data model, color conversion, and lossless image/annotation I/O.

Coordinate convention: origin at the top-left corner, x grows rightward,
y grows downward. Box coordinates are continuous; pixel (row i, col j)
covers the square [j, j+1) x [i, i+1).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import DimensionMismatch, EmptyBox, FormatError

# ITU-R 601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

PNG_EXTS = {".png"}
PNM_EXTS = {".ppm", ".pgm", ".pnm"}


class Channels(IntEnum):
    GRAY = 1
    RGB = 3
    RGBA = 4


@dataclass(frozen=True)
class Image:
    """Immutable 8-bit raster, shape (height, width, channels)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3, 4):
            raise ValueError(f"bad raster shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"raster must be uint8, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> Channels:
        return Channels(self.pixels.shape[2])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    @classmethod
    def full(cls, width: int, height: int, channels: int, value=0) -> "Image":
        arr = np.full((height, width, int(channels)), value, dtype=np.uint8)
        return cls(arr)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: (x, y) is the top-left corner, w/h the extents."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise EmptyBox(f"box must have positive extent, got w={self.w} h={self.h}")

    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Annotation:
    frame: int
    box: BoundingBox
    score: Optional[float] = None
    label: str = "drone"

    def __post_init__(self):
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0,1], got {self.score}")


def to_grayscale(img: Image) -> tuple[Image, Optional[Image]]:
    """Convert to gray via ITU-R 601 luma; returns (gray, alpha mask or None).

    Idempotent: gray input comes back unchanged.
    """
    arr = img.pixels
    if img.channels == Channels.GRAY:
        return img, None
    rgb = arr[:, :, :3].astype(np.float64)
    luma = rgb[:, :, 0] * LUMA_WEIGHTS[0] + rgb[:, :, 1] * LUMA_WEIGHTS[1] + rgb[:, :, 2] * LUMA_WEIGHTS[2]
    gray = Image(np.floor(luma + 0.5).astype(np.uint8))
    alpha = None
    if img.channels == Channels.RGBA:
        alpha = Image(arr[:, :, 3].copy())
    return gray, alpha


def clamp_box(box: BoundingBox, width: float, height: float) -> BoundingBox:
    """Intersect box with the image rectangle [0,width] x [0,height]."""
    x1 = max(box.x, 0.0)
    y1 = max(box.y, 0.0)
    x2 = min(box.x2, float(width))
    y2 = min(box.y2, float(height))
    if x2 <= x1 or y2 <= y1:
        raise EmptyBox(f"box {box} falls outside the {width}x{height} frame")
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)


# ---------------------------------------------------------------------------
# Image file I/O: PNG (via Pillow) plus binary PPM (P6) / PGM (P5), maxval 255.
# ---------------------------------------------------------------------------

def load_image(path) -> Image:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError:
        raise
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(path)
    if raw[:2] in (b"P5", b"P6"):
        return _decode_pnm(raw)
    raise FormatError(f"{path}: not a PNG, PPM (P6), or PGM (P5) file")


def save_image(img: Image, path) -> None:
    path = Path(path)
    ext = path.suffix.lower()
    if ext in PNM_EXTS:
        path.write_bytes(_encode_pnm(img))
        return
    # default to PNG
    arr = img.pixels
    mode = {1: "L", 3: "RGB", 4: "RGBA"}[arr.shape[2]]
    pil = PILImage.fromarray(arr[:, :, 0] if arr.shape[2] == 1 else arr, mode=mode)
    pil.save(path, format="PNG")


def _decode_png(path: Path) -> Image:
    try:
        with PILImage.open(path) as pil:
            pil.load()
            if pil.mode not in ("L", "RGB", "RGBA"):
                pil = pil.convert("RGBA" if "A" in pil.mode or "transparency" in pil.info else "RGB")
            arr = np.asarray(pil, dtype=np.uint8)
    except (UnidentifiedImageError, SyntaxError, ValueError, OSError) as e:
        if isinstance(e, OSError) and not isinstance(e, UnidentifiedImageError):
            # Pillow raises OSError for truncated payloads too
            raise FormatError(f"{path}: {e}") from e
        raise FormatError(f"{path}: {e}") from e
    return Image(arr)


def _decode_pnm(raw: bytes) -> Image:
    magic = raw[:2]
    nchan = 3 if magic == b"P6" else 1
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and comments between header tokens
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PNM header")
        tok = raw[start:pos]
        if not tok.isdigit():
            raise FormatError(f"bad PNM header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad PNM dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace after maxval
    payload = raw[pos : pos + width * height * nchan]
    if len(payload) != width * height * nchan:
        raise FormatError("truncated PNM payload")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, nchan)
    return Image(arr.copy())


def _encode_pnm(img: Image) -> bytes:
    if img.channels == Channels.RGB:
        magic = b"P6"
        arr = img.pixels
    elif img.channels == Channels.GRAY:
        magic = b"P5"
        arr = img.pixels
    else:
        raise FormatError("PNM cannot store an alpha channel; use PNG")
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + arr.tobytes()


# ---------------------------------------------------------------------------
# Annotations: JSON Lines, one object per line.
# ---------------------------------------------------------------------------

def write_annotations(annotations: Iterable[Annotation], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ann in annotations:
            rec = {
                "frame": ann.frame,
                "x": ann.box.x,
                "y": ann.box.y,
                "w": ann.box.w,
                "h": ann.box.h,
                "score": ann.score,
                "label": ann.label,
            }
            fh.write(json.dumps(rec) + "\n")


def read_annotations(path) -> list[Annotation]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                Annotation(
                    frame=int(rec["frame"]),
                    box=BoundingBox(rec["x"], rec["y"], rec["w"], rec["h"]),
                    score=rec.get("score"),
                    label=rec.get("label", "drone"),
                )
            )
    return out


# ---------------------------------------------------------------------------
# "Video" = directory of zero-padded numbered frames at constant resolution.
# ---------------------------------------------------------------------------

def frame_name(index: int, ext: str = ".png") -> str:
    return f"frame_{index:06d}{ext}"


def list_frame_files(directory) -> list[Path]:
    directory = Path(directory)
    files = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in (PNG_EXTS | PNM_EXTS)
    )
    return files


def load_frames(directory) -> list[Image]:
    files = list_frame_files(directory)
    frames = [load_image(p) for p in files]
    if frames:
        shape = frames[0].pixels.shape
        for p, f in zip(files, frames):
            if f.pixels.shape != shape:
                raise DimensionMismatch(
                    f"{p}: resolution {f.pixels.shape} differs from first frame {shape}"
                )
    return frames
