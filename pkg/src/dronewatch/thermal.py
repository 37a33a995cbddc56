"""Adversarial thermal-augmentation numerics: gram-matrix texture features,
cycle-consistency / perceptual-texture / total losses over abstract mapping
and discriminator callables, and the traditional monochrome conversion.

Tensors are plain float64 numpy arrays. Mapping functions must preserve
shape; discriminators return a probability which is clamped to
[EPS, 1 - EPS] before any log.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError
from .imaging import Channels, Image, to_grayscale

EPS = 1e-7

MappingFn = Callable[[np.ndarray], np.ndarray]
DiscriminatorFn = Callable[[np.ndarray], float]
FeatureExtractorFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LossWeights:
    """Relative importance of the cycle-consistency term."""

    cycle_lambda: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.cycle_lambda) and self.cycle_lambda >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.cycle_lambda}")


def load_tensor(path) -> np.ndarray:
    """Read the JSON tensor literal {"shape": [...], "data": [...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    shape = tuple(int(d) for d in raw["shape"])
    data = np.asarray(raw["data"], dtype=np.float64)
    if data.size != int(np.prod(shape)):
        raise ShapeError(f"{path}: {data.size} values for shape {shape}")
    return data.reshape(shape)


def gram_matrix(features: np.ndarray) -> np.ndarray:
    """G[i,j] = (1 / (C*H*W)) sum_hw F[i,h,w] F[j,h,w] for a C x H x W map."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise ShapeError(f"expected a C x H x W feature map, got shape {features.shape}")
    c, h, w = features.shape
    flat = features.reshape(c, h * w)
    return flat @ flat.T / (c * h * w)


def _apply(fn: MappingFn, x: np.ndarray) -> np.ndarray:
    out = np.asarray(fn(x), dtype=np.float64)
    if out.shape != x.shape:
        raise ShapeError(f"mapping changed shape {x.shape} -> {out.shape}")
    return out


def cycle_consistency_loss(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray],
                           g_a: MappingFn, g_b: MappingFn) -> float:
    """Mean per-element L1 reconstruction error of the two round trips
    x -> g_b(g_a(x)) and y -> g_a(g_b(y))."""
    if not xs or not ys:
        raise ValueError("batches must be nonempty")
    term_x = float(np.mean([np.mean(np.abs(_apply(g_b, _apply(g_a, x)) - x)) for x in xs]))
    term_y = float(np.mean([np.mean(np.abs(_apply(g_a, _apply(g_b, y)) - y)) for y in ys]))
    return term_x + term_y


def _clamped_log(d: float) -> float:
    return math.log(min(max(d, EPS), 1.0 - EPS))


def texture_gan_loss(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray],
                     g_a: MappingFn, d_b: DiscriminatorFn,
                     phi: FeatureExtractorFn) -> float:
    """Adversarial loss on gram-matrix texture features:
    E_y[log D(gram(phi(y)))] + E_x[log(1 - D(gram(phi(G(x)))))]."""
    if not xs or not ys:
        raise ValueError("batches must be nonempty")
    real = float(np.mean([_clamped_log(d_b(gram_matrix(phi(y)))) for y in ys]))
    fake = float(np.mean([
        math.log(1.0 - min(max(d_b(gram_matrix(phi(_apply(g_a, x)))), EPS), 1.0 - EPS))
        for x in xs
    ]))
    return real + fake


def total_loss(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray],
               g_a: MappingFn, g_b: MappingFn,
               d_a: DiscriminatorFn, d_b: DiscriminatorFn,
               phi: FeatureExtractorFn, weights: LossWeights) -> float:
    """lambda * cycle loss + the two directional texture losses."""
    return (
        weights.cycle_lambda * cycle_consistency_loss(xs, ys, g_a, g_b)
        + texture_gan_loss(xs, ys, g_a, d_b, phi)
        + texture_gan_loss(ys, xs, g_b, d_a, phi)
    )


# ---------------------------------------------------------------------------
# Toy callables for testing and CLI spot checks (no training here)
# ---------------------------------------------------------------------------

def identity_map(x: np.ndarray) -> np.ndarray:
    return x


def shift_map(offset: float) -> MappingFn:
    def fn(x: np.ndarray) -> np.ndarray:
        return x + offset
    return fn


def scale_map(factor: float) -> MappingFn:
    def fn(x: np.ndarray) -> np.ndarray:
        return x * factor
    return fn


def constant_discriminator(p: float) -> DiscriminatorFn:
    def fn(_t: np.ndarray) -> float:
        return p
    return fn


def linear_discriminator(weight: float = 1.0, bias: float = 0.0) -> DiscriminatorFn:
    """Sigmoid of an affine function of the mean input value."""
    def fn(t: np.ndarray) -> float:
        z = weight * float(np.mean(t)) + bias
        return 1.0 / (1.0 + math.exp(-z))
    return fn


# ---------------------------------------------------------------------------
# Traditional monochrome thermal conversion
# ---------------------------------------------------------------------------

THERMAL_TARGET_GRAY = 180
THERMAL_BLEND = 0.6


def monochrome_thermal(img: Image, target_gray: int = THERMAL_TARGET_GRAY,
                       blend: float = THERMAL_BLEND) -> Image:
    """Grayscale then compress contrast toward a uniform mid-gray:
    out = round(g * (1 - blend) + target_gray * blend).

    RGB input returns a Gray image; RGBA keeps its alpha, with all color
    channels set to the compressed gray.
    """
    if img.channels == Channels.GRAY:
        gray, alpha = img, None
    else:
        gray, alpha = to_grayscale(img)
    g = gray.pixels[:, :, 0].astype(np.float64)
    out = np.floor(g * (1.0 - blend) + target_gray * blend + 0.5).astype(np.uint8)
    if img.channels == Channels.RGBA:
        res = img.pixels.copy()
        res[:, :, 0] = res[:, :, 1] = res[:, :, 2] = out
        return Image(res)
    return Image(out)
