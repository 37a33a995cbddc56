#!/usr/bin/env python3
"""End-to-end augmentation demo: synthesize a couple of RGBA foreground
assets and backgrounds, then run the `dronewatch augment` pipeline on them and
report the generated annotations.

Usage:
    python3 scripts/augment_demo.py [--out DIR] [--count N] [--seed S]
"""

import argparse
import sys
import tempfile
from pathlib import Path

import numpy as np

from dronewatch.augment import perlin2
from dronewatch.cli import main as cli_main
from dronewatch.imaging import Image, read_annotations, save_image


def make_asset(rng, w=32, h=24) -> Image:
    """Dark cross on a transparent canvas — a crude drone silhouette."""
    arr = np.zeros((h, w, 4), dtype=np.uint8)
    body = rng.integers(30, 80)
    arr[h // 3: 2 * h // 3, :, :3] = body
    arr[h // 3: 2 * h // 3, :, 3] = 255
    arr[:, w // 3: 2 * w // 3, :3] = body
    arr[:, w // 3: 2 * w // 3, 3] = 255
    return Image(arr)


def make_background(seed, w=320, h=240) -> Image:
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float),
                         indexing="ij")
    sky = np.clip(150 + 70 * np.asarray(perlin2(xs / 64, ys / 64, seed=seed)), 0, 255)
    arr = np.stack([sky * 0.7, sky * 0.8, sky], axis=2)
    return Image(np.floor(arr + 0.5).astype(np.uint8))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="augment_demo_out")
    ap.add_argument("--count", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        fg, bg = Path(tmp) / "fg", Path(tmp) / "bg"
        fg.mkdir(), bg.mkdir()
        for i in range(3):
            save_image(make_asset(rng), fg / f"asset_{i}.png")
        for i in range(2):
            save_image(make_background(args.seed + i), bg / f"bg_{i}.png")
        code = cli_main(["augment", "--fg", str(fg), "--bg", str(bg),
                         "--count", str(args.count), "--seed", str(args.seed),
                         "--out", args.out])
        if code != 0:
            return code

    anns = read_annotations(Path(args.out) / "annotations.jsonl")
    print(f"wrote {len(anns)} samples to {args.out}/")
    for a in anns[:5]:
        print(f"  frame {a.frame}: box=({a.box.x:.1f}, {a.box.y:.1f}, "
              f"{a.box.w:.1f}, {a.box.h:.1f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
