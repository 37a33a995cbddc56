"""Model-based data augmentation: paste transformed foreground assets onto
backgrounds under illumination and image-quality perturbations, and derive
the tight bounding-box annotation automatically from the placed alpha mask.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import EmptyAsset, DimensionMismatch, NoValidPlacement
from .imaging import Annotation, BoundingBox, Channels, Image, clamp_box, to_grayscale

MAX_PLACEMENT_DRAWS = 1000


@dataclass(frozen=True)
class ForegroundAsset:
    """RGBA cut-out of the object to paste; alpha is coverage."""

    raster: Image
    name: str = ""

    def __post_init__(self):
        if self.raster.channels != Channels.RGBA:
            raise ValueError("foreground asset must be RGBA")

    @property
    def alpha(self) -> np.ndarray:
        return self.raster.pixels[:, :, 3]


@dataclass(frozen=True)
class PlacementParams:
    scale_ratio: float        # foreground width / background width
    rotation_deg: float
    center: tuple[float, float]  # in background pixel coordinates


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    scale_range: tuple[float, float] = (0.1, 0.5)
    rotation_range: tuple[float, float] = (-30.0, 30.0)
    p_shadow_lines: float = 0.3
    p_shadow_perlin: float = 0.3
    p_grayscale: float = 0.2
    p_gaussian_blur: float = 0.3
    p_motion_blur: float = 0.3
    gaussian_sigma_range: tuple[float, float] = (0.5, 2.0)
    motion_blur_length_range: tuple[float, float] = (3.0, 9.0)
    motion_blur_angle_range: tuple[float, float] = (0.0, 180.0)
    shadow_strength_range: tuple[float, float] = (0.3, 0.8)
    shadow_lines_count: int = 2
    shadow_softness: float = 8.0
    min_coverage: float = 0.5  # fraction of foreground area that must stay in frame

    def __post_init__(self):
        for name in ("p_shadow_lines", "p_shadow_perlin", "p_grayscale",
                     "p_gaussian_blur", "p_motion_blur"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {v}")
        for name in ("scale_range", "rotation_range", "gaussian_sigma_range",
                     "motion_blur_length_range", "motion_blur_angle_range",
                     "shadow_strength_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")

    @classmethod
    def from_json(cls, path) -> "AugmentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        kwargs = {}
        for key, value in raw.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown augment config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def _bilinear_sample(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample float array (h, w, c) at continuous coords; outside -> 0."""
    h, w = arr.shape[:2]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]

    def tap(yy, xx):
        inside = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        vals = arr[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return vals * inside[..., None]

    v00 = tap(y0, x0)
    v01 = tap(y0, x0 + 1)
    v10 = tap(y0 + 1, x0)
    v11 = tap(y0 + 1, x0 + 1)
    top = v00 * (1 - fx) + v01 * fx
    bot = v10 * (1 - fx) + v11 * fx
    return top * (1 - fy) + bot * fy


def _rotate_rgba(arr: np.ndarray, deg: float) -> np.ndarray:
    """Rotate about the raster center, expanding the canvas; bilinear."""
    if deg % 360.0 == 0.0:
        return arr.astype(np.float64)
    theta = math.radians(deg)
    c, s = math.cos(theta), math.sin(theta)
    h, w = arr.shape[:2]
    out_w = max(1, int(math.ceil(w * abs(c) + h * abs(s) - 1e-9)))
    out_h = max(1, int(math.ceil(w * abs(s) + h * abs(c) - 1e-9)))
    yo, xo = np.meshgrid(np.arange(out_h, dtype=np.float64),
                         np.arange(out_w, dtype=np.float64), indexing="ij")
    # coordinates relative to centers, pixel centers at integer + 0.5
    xr = xo + 0.5 - out_w / 2.0
    yr = yo + 0.5 - out_h / 2.0
    # inverse rotation back into source space
    xs = c * xr + s * yr + w / 2.0 - 0.5
    ys = -s * xr + c * yr + h / 2.0 - 0.5
    return _bilinear_sample(arr.astype(np.float64), xs, ys)


def _resize(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w = arr.shape[:2]
    if (out_w, out_h) == (w, h):
        return arr.astype(np.float64)
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xg, yg = np.meshgrid(xs, ys)
    return _bilinear_sample(arr.astype(np.float64), xg, yg)


def transform_foreground(asset: ForegroundAsset, p: PlacementParams,
                         bg_width: int) -> ForegroundAsset:
    """Rotate about the center, then scale uniformly so the output width is
    scale_ratio x background width. Alpha is resampled like any color channel.
    """
    rotated = _rotate_rgba(asset.raster.pixels, p.rotation_deg)
    out_w = max(1, int(round(p.scale_ratio * bg_width)))
    factor = out_w / rotated.shape[1]
    out_h = max(1, int(round(rotated.shape[0] * factor)))
    scaled = _resize(rotated, out_w, out_h)
    raster = Image(np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8))
    return ForegroundAsset(raster=raster, name=asset.name)


def tight_alpha_box(asset: ForegroundAsset) -> BoundingBox:
    """Smallest axis-aligned box containing every pixel with alpha > 0."""
    rows, cols = np.nonzero(asset.alpha > 0)
    if rows.size == 0:
        raise EmptyAsset(f"asset {asset.name!r} is fully transparent")
    return BoundingBox(
        float(cols.min()), float(rows.min()),
        float(cols.max() - cols.min() + 1), float(rows.max() - rows.min() + 1),
    )


def _transformed_extent(fg_w: int, fg_h: int, scale_ratio: float,
                        rotation_deg: float, bg_w: int) -> tuple[float, float]:
    theta = math.radians(rotation_deg)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    rot_w = fg_w * c + fg_h * s
    rot_h = fg_w * s + fg_h * c
    out_w = scale_ratio * bg_w
    return out_w, rot_h * (out_w / rot_w)


def sample_placement(rng: np.random.Generator, bg: tuple[int, int],
                     fg: tuple[int, int], cfg: AugmentConfig) -> PlacementParams:
    """Draw scale/rotation uniformly from the configured ranges and a center
    uniform over positions keeping at least min_coverage of the transformed
    foreground area inside the frame.
    """
    bg_w, bg_h = bg
    fg_w, fg_h = fg
    scale = float(rng.uniform(*cfg.scale_range))
    rotation = float(rng.uniform(*cfg.rotation_range))
    tw, th = _transformed_extent(fg_w, fg_h, scale, rotation, bg_w)
    for _ in range(MAX_PLACEMENT_DRAWS):
        cx = float(rng.uniform(0.0, bg_w))
        cy = float(rng.uniform(0.0, bg_h))
        ox = min(cx + tw / 2, bg_w) - max(cx - tw / 2, 0.0)
        oy = min(cy + th / 2, bg_h) - max(cy - th / 2, 0.0)
        if ox > 0 and oy > 0 and (ox * oy) / (tw * th) >= cfg.min_coverage:
            return PlacementParams(scale_ratio=scale, rotation_deg=rotation,
                                   center=(cx, cy))
    raise NoValidPlacement(
        f"no center keeps {cfg.min_coverage:.0%} of a {tw:.0f}x{th:.0f} "
        f"foreground inside a {bg_w}x{bg_h} frame"
    )


# ---------------------------------------------------------------------------
# Perlin gradient noise (classic permutation-table variant, quintic fade)
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
# 8 unit gradients at 45 degree spacing
_GRADS = np.stack(
    [np.cos(np.arange(8) * math.pi / 4.0), np.sin(np.arange(8) * math.pi / 4.0)],
    axis=1,
)

_PERM_CACHE: dict[int, np.ndarray] = {}


def _perm_table(seed: int) -> np.ndarray:
    table = _PERM_CACHE.get(seed)
    if table is None:
        perm = np.random.default_rng(seed).permutation(256)
        table = np.concatenate([perm, perm]).astype(np.int64)
        if len(_PERM_CACHE) > 64:
            _PERM_CACHE.clear()
        _PERM_CACHE[seed] = table
    return table


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin2(x, y, seed: int = 0):
    """Classic 2D gradient noise in [-1, 1]; exactly 0 on the integer lattice.

    Accepts scalars or broadcastable arrays.
    """
    p = _perm_table(seed)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xi = np.floor(x).astype(np.int64)
    yi = np.floor(y).astype(np.int64)
    xf = x - xi
    yf = y - yi
    xi &= 255
    yi &= 255

    def corner_dot(ix, iy, dx, dy):
        g = _GRADS[p[p[ix] + iy] & 7]
        return g[..., 0] * dx + g[..., 1] * dy

    n00 = corner_dot(xi, yi, xf, yf)
    n10 = corner_dot(xi + 1, yi, xf - 1.0, yf)
    n01 = corner_dot(xi, yi + 1, xf, yf - 1.0)
    n11 = corner_dot(xi + 1, yi + 1, xf - 1.0, yf - 1.0)

    u = _fade(xf)
    v = _fade(yf)
    nx0 = n00 + u * (n10 - n00)
    nx1 = n01 + u * (n11 - n01)
    value = (nx0 + v * (nx1 - nx0)) * _SQRT2
    if value.ndim == 0:
        return float(value)
    return value


# ---------------------------------------------------------------------------
# Shadow maps and application
# ---------------------------------------------------------------------------

def shadow_map_lines(rng: np.random.Generator, dims: tuple[int, int],
                     n_lines: int, softness: float) -> Image:
    """Gray map in [0,255]: each random line darkens one half-plane, with the
    boundary softened over `softness` pixels."""
    w, h = dims
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    gain = np.ones((h, w), dtype=np.float64)
    for _ in range(n_lines):
        px = rng.uniform(0, w)
        py = rng.uniform(0, h)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        shade = rng.uniform(0.4, 0.9)
        d = (xs - px) * math.cos(angle) + (ys - py) * math.sin(angle)
        if softness > 0:
            weight = 1.0 / (1.0 + np.exp(np.clip(d / softness, -60, 60)))
        else:
            weight = (d < 0).astype(np.float64)
        gain *= shade + (1.0 - shade) * (1.0 - weight)
    return Image(np.floor(gain * 255.0 + 0.5).astype(np.uint8))


def shadow_map_perlin(seed: int, dims: tuple[int, int],
                      cell_size: float = 48.0) -> Image:
    """Irregular gray shadow map driven by one octave of gradient noise."""
    w, h = dims
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    noise = perlin2(xs / cell_size, ys / cell_size, seed=seed)
    gain = 0.5 + 0.5 * np.asarray(noise)
    return Image(np.floor(gain * 255.0 + 0.5).astype(np.uint8))


def apply_shadow(img: Image, shadow: Image, strength: float) -> Image:
    """out = img * (1 - strength * (1 - map/255)), per channel."""
    if shadow.channels != Channels.GRAY:
        raise DimensionMismatch("shadow map must be single-channel")
    if (shadow.height, shadow.width) != (img.height, img.width):
        raise DimensionMismatch(
            f"shadow map {shadow.width}x{shadow.height} vs image {img.width}x{img.height}"
        )
    gain = 1.0 - strength * (1.0 - shadow.pixels[:, :, 0].astype(np.float64) / 255.0)
    out = img.pixels.astype(np.float64) * gain[:, :, None]
    if img.channels == Channels.RGBA:
        # shadow darkens color only; coverage is untouched
        out[:, :, 3] = img.pixels[:, :, 3]
    return Image(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Blur filters
# ---------------------------------------------------------------------------

def gaussian_blur_values(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Float core of gaussian_blur: separable kernel of radius ceil(3 sigma),
    normalized to sum 1, mirror boundary. Mass-preserving before quantization."""
    radius = int(math.ceil(3.0 * sigma))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(k * k) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = ndimage.convolve1d(arr.astype(np.float64), kernel, axis=0, mode="reflect")
    return ndimage.convolve1d(out, kernel, axis=1, mode="reflect")


def gaussian_blur(img: Image, sigma: float) -> Image:
    """Separable Gaussian, radius ceil(3 sigma), mirror boundary; sigma 0 is identity."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img
    out = gaussian_blur_values(img.pixels, sigma)
    return Image(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def _line_kernel(length: float, angle_deg: float) -> np.ndarray:
    """Antialiased line kernel of the given length and angle, normalized to 1."""
    radius = int(math.ceil(length / 2.0))
    size = 2 * radius + 1
    kernel = np.zeros((size, size), dtype=np.float64)
    theta = math.radians(angle_deg)
    dx, dy = math.cos(theta), math.sin(theta)
    n_steps = max(2, int(math.ceil(length * 8)))
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, n_steps):
        x = radius + t * dx
        y = radius + t * dy
        x0, y0 = int(math.floor(x)), int(math.floor(y))
        fx, fy = x - x0, y - y0
        for oy, wy in ((0, 1 - fy), (1, fy)):
            for ox, wx in ((0, 1 - fx), (1, fx)):
                yy, xx = y0 + oy, x0 + ox
                if 0 <= yy < size and 0 <= xx < size:
                    kernel[yy, xx] += wy * wx
    kernel /= kernel.sum()
    return kernel


def motion_blur_values(arr: np.ndarray, length: float, angle_deg: float) -> np.ndarray:
    """Float core of motion_blur: normalized antialiased line kernel, mirror
    boundary. Mass-preserving before quantization."""
    kernel = _line_kernel(length, angle_deg)
    src = arr.astype(np.float64)
    out = np.empty_like(src)
    for ch in range(src.shape[2]):
        out[:, :, ch] = ndimage.convolve(src[:, :, ch], kernel, mode="reflect")
    return out


def motion_blur(img: Image, length: float, angle_deg: float) -> Image:
    """Convolve with a normalized line kernel; length 1 is identity."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if length == 1:
        return img
    out = motion_blur_values(img.pixels, length, angle_deg)
    return Image(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Compositing and the full sample pipeline
# ---------------------------------------------------------------------------

def composite(bg: Image, asset: ForegroundAsset,
              p: PlacementParams) -> tuple[Image, BoundingBox]:
    """Alpha-over the (already transformed) asset centered at p.center.

    Pixels with zero placed alpha stay bit-identical to the background. The
    returned box is the tight alpha box of the placed asset, clamped to frame.
    """
    if bg.channels != Channels.RGB:
        raise ValueError("background must be RGB")
    tight = tight_alpha_box(asset)  # raises EmptyAsset for transparent assets
    fg = asset.raster.pixels
    fh, fw = fg.shape[:2]
    x0 = int(round(p.center[0] - fw / 2.0))
    y0 = int(round(p.center[1] - fh / 2.0))

    # overlap of the placed asset with the frame
    bx0, by0 = max(x0, 0), max(y0, 0)
    bx1, by1 = min(x0 + fw, bg.width), min(y0 + fh, bg.height)
    out = bg.pixels.copy()
    if bx1 > bx0 and by1 > by0:
        sub_fg = fg[by0 - y0 : by1 - y0, bx0 - x0 : bx1 - x0].astype(np.float64)
        sub_bg = out[by0:by1, bx0:bx1].astype(np.float64)
        a = sub_fg[:, :, 3:4] / 255.0
        blended = sub_bg * (1.0 - a) + sub_fg[:, :, :3] * a
        blended = np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)
        zero = sub_fg[:, :, 3] == 0
        blended[zero] = out[by0:by1, bx0:bx1][zero]
        out[by0:by1, bx0:bx1] = blended

    placed = BoundingBox(tight.x + x0, tight.y + y0, tight.w, tight.h)
    return Image(out), clamp_box(placed, bg.width, bg.height)


def _grayscale_foreground(asset: ForegroundAsset) -> ForegroundAsset:
    gray, _ = to_grayscale(Image(asset.raster.pixels[:, :, :3]))
    out = asset.raster.pixels.copy()
    out[:, :, 0] = out[:, :, 1] = out[:, :, 2] = gray.pixels[:, :, 0]
    return ForegroundAsset(raster=Image(out), name=asset.name)


def generate_sample(rng: np.random.Generator, bg: Image,
                    assets: Sequence[ForegroundAsset],
                    cfg: AugmentConfig) -> tuple[Image, Annotation]:
    """One augmented sample: pick an asset, place it, perturb, composite,
    optionally shade the result. Pure function of (rng state, inputs, cfg)."""
    if not assets:
        raise ValueError("assets must be nonempty")
    asset = assets[int(rng.integers(len(assets)))]
    p = sample_placement(rng, (bg.width, bg.height),
                         (asset.raster.width, asset.raster.height), cfg)
    fg = transform_foreground(asset, p, bg.width)

    if rng.random() < cfg.p_grayscale:
        fg = _grayscale_foreground(fg)
    if rng.random() < cfg.p_gaussian_blur:
        sigma = float(rng.uniform(*cfg.gaussian_sigma_range))
        fg = ForegroundAsset(gaussian_blur(fg.raster, sigma), fg.name)
    if rng.random() < cfg.p_motion_blur:
        length = float(rng.uniform(*cfg.motion_blur_length_range))
        angle = float(rng.uniform(*cfg.motion_blur_angle_range))
        fg = ForegroundAsset(motion_blur(fg.raster, length, angle), fg.name)

    img, box = composite(bg, fg, p)

    if rng.random() < cfg.p_shadow_lines:
        strength = float(rng.uniform(*cfg.shadow_strength_range))
        smap = shadow_map_lines(rng, (img.width, img.height),
                                cfg.shadow_lines_count, cfg.shadow_softness)
        img = apply_shadow(img, smap, strength)
    if rng.random() < cfg.p_shadow_perlin:
        strength = float(rng.uniform(*cfg.shadow_strength_range))
        smap = shadow_map_perlin(int(rng.integers(2**32)), (img.width, img.height))
        img = apply_shadow(img, smap, strength)

    return img, Annotation(frame=0, box=box, score=None, label="drone")
