"""Single command-line entry point: augment, residual, monitor, eval-track,
eval-detect, gan-loss, and demo subcommands. Every successful run writes a
manifest next to its outputs; all seeded subcommands are deterministic under
a fixed --seed, regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentConfig, ForegroundAsset, generate_sample
from .errors import DimensionMismatch, FormatError
from .fusion import CalibrationParams, MonitorConfig
from .imaging import (Annotation, Channels, Image, frame_name, list_frame_files,
                      load_frames, load_image, read_annotations, save_image,
                      write_annotations)
from .metrics import auc, pr_auc, precision_recall, success_curve
from .residual import FrameSequence, residual_sequence
from .scenario import (ScenarioConfig, annotations_to_pred, make_trajectory,
                       render_frames, run_scenario_mode)
from .thermal import (LossWeights, constant_discriminator, cycle_consistency_loss,
                      identity_map, linear_discriminator, load_tensor, scale_map,
                      shift_map, texture_gan_loss, total_loss)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_DATA = 4


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_manifest(out_dir: Path, subcommand: str, config: dict, seed,
                    inputs: dict, outputs: list[str], started: float) -> None:
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs,
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------

def _load_assets(fg_dir: Path) -> list[ForegroundAsset]:
    assets = []
    for path in sorted(fg_dir.glob("*.png")):
        img = load_image(path)
        if img.channels != Channels.RGBA:
            continue
        assets.append(ForegroundAsset(raster=img, name=path.stem))
    return assets


def cmd_augment(args) -> int:
    started = time.monotonic()
    fg_dir, bg_dir, out_dir = Path(args.fg), Path(args.bg), Path(args.out)
    if not fg_dir.is_dir() or not bg_dir.is_dir():
        print(f"error: missing input directory", file=sys.stderr)
        return EXIT_IO
    cfg = AugmentConfig.from_json(args.config) if args.config else AugmentConfig()
    assets = _load_assets(fg_dir)
    if not assets:
        print(f"error: no RGBA PNG assets found in {fg_dir}", file=sys.stderr)
        return EXIT_CONFIG
    bg_files = sorted(p for p in bg_dir.iterdir()
                      if p.suffix.lower() in (".png", ".ppm"))
    backgrounds = [load_image(p) for p in bg_files]
    backgrounds = [b for b in backgrounds if b.channels == Channels.RGB]
    if not backgrounds:
        print(f"error: no RGB backgrounds found in {bg_dir}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir.mkdir(parents=True, exist_ok=True)

    def make(i: int):
        rng = np.random.default_rng(args.seed ^ i)
        bg = backgrounds[int(rng.integers(len(backgrounds)))]
        img, ann = generate_sample(rng, bg, assets, cfg)
        return img, Annotation(frame=i, box=ann.box, score=ann.score, label=ann.label)

    indices = range(args.count)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            samples = list(pool.map(make, indices))
    else:
        samples = [make(i) for i in indices]

    outputs = []
    annotations = []
    for i, (img, ann) in enumerate(samples):
        name = f"sample_{i:06d}.png"
        save_image(img, out_dir / name)
        outputs.append(name)
        annotations.append(ann)
    write_annotations(annotations, out_dir / "annotations.jsonl")
    outputs.append("annotations.jsonl")
    _write_manifest(out_dir, "augment", cfg.to_dict(), args.seed,
                    {"fg": str(fg_dir), "bg": str(bg_dir)}, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# residual
# ---------------------------------------------------------------------------

def cmd_residual(args) -> int:
    started = time.monotonic()
    frames_dir, out_dir = Path(args.frames), Path(args.out)
    try:
        frames = load_frames(frames_dir)
    except (OSError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except DimensionMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    if not frames:
        print(f"error: no frames in {frames_dir}", file=sys.stderr)
        return EXIT_IO
    shifts: list = []
    result = residual_sequence(FrameSequence(frames=tuple(frames)),
                               compensate=args.compensate, radius=args.radius,
                               shifts_out=shifts)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for i, frame in enumerate(result.frames):
        name = frame_name(i)
        save_image(frame, out_dir / name)
        outputs.append(name)
    with open(out_dir / "shifts.json", "w", encoding="utf-8") as fh:
        json.dump({"compensate": args.compensate, "radius": args.radius,
                   "shifts": [list(s) for s in shifts]}, fh, indent=2)
        fh.write("\n")
    outputs.append("shifts.json")
    _write_manifest(out_dir, "residual",
                    {"compensate": args.compensate, "radius": args.radius},
                    None, {"frames": str(frames_dir)}, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# monitor
# ---------------------------------------------------------------------------

def _load_monitor_config(path) -> tuple[CalibrationParams, MonitorConfig, dict]:
    raw = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    calib = CalibrationParams(
        beta1=raw.get("beta1", 10.0), alpha1=raw.get("alpha1", 0.5),
        beta2=raw.get("beta2", 10.0), alpha2=raw.get("alpha2", 0.5),
    )
    mon = MonitorConfig.from_dict(raw)
    return calib, mon, raw


def cmd_monitor(args) -> int:
    started = time.monotonic()
    frames_dir = Path(args.frames)
    try:
        frames = load_frames(frames_dir)
        gt = read_annotations(args.gt)
    except (OSError, FormatError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        calib, mon, raw = _load_monitor_config(args.config)
    except (ValueError, KeyError) as e:
        print(f"error: bad monitor config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    sim = raw.get("simulation", {})
    scen = ScenarioConfig(
        n_frames=len(frames), frame_size=(frames[0].width, frames[0].height),
        miss_rate=sim.get("miss_rate", 0.0), fp_rate=sim.get("fp_rate", 0.0),
        loc_noise_sigma=sim.get("loc_noise_sigma", 0.0),
        drift_per_frame=sim.get("drift_per_frame", 0.0),
        loss_event=tuple(sim["loss_event"]) if sim.get("loss_event") else None,
    )
    anns = run_scenario_mode(args.mode, frames, gt, scen, args.seed,
                             params=calib, monitor_cfg=mon)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_annotations(anns, out)
    _write_manifest(out.parent, "monitor",
                    {**raw, "mode": args.mode}, args.seed,
                    {"frames": str(frames_dir), "gt": str(args.gt)},
                    [out.name], started)
    return 0


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def cmd_eval_track(args) -> int:
    try:
        pred_anns = read_annotations(args.pred)
        gt_anns = read_annotations(args.gt)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    gt_frames = [a.frame for a in gt_anns]
    pred_by_frame = {a.frame: a.box for a in pred_anns}
    pred = [pred_by_frame.get(f) for f in gt_frames]
    curve = success_curve(pred, [a.box for a in gt_anns])
    area = auc(curve)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("threshold,success_rate\n")
        for t, r in zip(curve.thresholds, curve.success_rate):
            fh.write(f"{t:.2f},{r:.6f}\n")
        fh.write(f"AUC,{area:.6f}\n")
    print(f"AUC {area:.6f}")
    return 0


def cmd_eval_detect(args) -> int:
    try:
        dets = read_annotations(args.dets)
        gt = read_annotations(args.gt)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    curve = precision_recall(dets, gt, iou_thresh=args.iou)
    area = pr_auc(curve)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("recall,precision\n")
        for r, p in curve.points:
            fh.write(f"{r:.6f},{p:.6f}\n")
        fh.write(f"AUC,{area:.6f}\n")
    print(f"AUC {area:.6f}")
    return 0


# ---------------------------------------------------------------------------
# gan-loss
# ---------------------------------------------------------------------------

def _parse_map(spec: str):
    if spec == "identity":
        return identity_map
    kind, _, arg = spec.partition(":")
    if kind == "shift":
        return shift_map(float(arg))
    if kind == "scale":
        return scale_map(float(arg))
    raise ConfigError(f"unknown mapping spec {spec!r}")


def _parse_disc(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        return constant_discriminator(float(arg))
    if kind == "linear":
        parts = [float(v) for v in arg.split(",")] if arg else [1.0, 0.0]
        return linear_discriminator(*parts)
    raise ConfigError(f"unknown discriminator spec {spec!r}")


def cmd_gan_loss(args) -> int:
    loss = args.loss
    if args.cycle:
        loss = "cycle"
    elif args.texture:
        loss = "texture"
    elif args.total:
        loss = "total"
    try:
        xs = [load_tensor(p) for p in args.xs]
        ys = [load_tensor(p) for p in args.ys]
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.identity:
            g_a = g_b = identity_map
        else:
            g_a, g_b = _parse_map(args.ga), _parse_map(args.gb)
        d_a, d_b = _parse_disc(args.da), _parse_disc(args.db)
        phi = _parse_map(args.phi)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if loss == "cycle":
        value = cycle_consistency_loss(xs, ys, g_a, g_b)
    elif loss == "texture":
        value = texture_gan_loss(xs, ys, g_a, d_b, phi)
    else:
        value = total_loss(xs, ys, g_a, g_b, d_a, d_b, phi,
                           LossWeights(cycle_lambda=args.cycle_lambda))
    print(f"{value:.10g}")
    return 0


# ---------------------------------------------------------------------------
# demo scenario
# ---------------------------------------------------------------------------

def cmd_demo(args) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    scen = ScenarioConfig(n_frames=args.count)
    gt = make_trajectory(scen, args.seed)
    frames = render_frames(gt, scen.frame_size, args.seed)
    for i, frame in enumerate(frames):
        save_image(frame, frames_dir / frame_name(i))
    write_annotations(gt, out_dir / "gt.jsonl")
    config = {
        "beta1": 10.0, "alpha1": 0.5, "beta2": 10.0, "alpha2": 0.5,
        "detect_every_n": 5, "reinit_threshold": 0.5,
        "reject_epsilon": 0.05, "lost_patience": 30,
        "simulation": {
            "miss_rate": scen.miss_rate, "fp_rate": scen.fp_rate,
            "loc_noise_sigma": scen.loc_noise_sigma,
            "drift_per_frame": scen.drift_per_frame,
            "loss_event": list(scen.loss_event) if scen.loss_event else None,
        },
    }
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    _write_manifest(out_dir, "demo", config, args.seed, {},
                    ["frames/", "gt.jsonl", "config.json"], started)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dronewatch",
                     description="Synthetic augmentation, residual preprocessing, "
                                 "fusion monitoring, and evaluation toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="generate augmented samples with box labels")
    p.add_argument("--fg", required=True, help="directory of RGBA PNG assets")
    p.add_argument("--bg", required=True, help="directory of RGB backgrounds")
    p.add_argument("--config", default=None, help="AugmentConfig JSON")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("residual", help="residual-frame preprocessing")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--compensate", action="store_true")
    p.add_argument("--radius", type=int, default=5)
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("monitor", help="run the detection-tracking monitor")
    p.add_argument("--frames", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["integrated", "detect-only", "track-only"],
                   default="integrated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("eval-track", help="success curve and AUC")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_track)

    p = sub.add_parser("eval-detect", help="precision-recall curve and AUC")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("gan-loss", help="evaluate the augmentation losses")
    p.add_argument("--loss", choices=["cycle", "texture", "total"], default="total")
    p.add_argument("--cycle", action="store_true", help="shorthand for --loss cycle")
    p.add_argument("--texture", action="store_true", help="shorthand for --loss texture")
    p.add_argument("--total", action="store_true", help="shorthand for --loss total")
    p.add_argument("--xs", action="append", required=True, help="tensor JSON (repeatable)")
    p.add_argument("--ys", action="append", required=True, help="tensor JSON (repeatable)")
    p.add_argument("--identity", action="store_true", help="use identity generators")
    p.add_argument("--ga", default="identity")
    p.add_argument("--gb", default="identity")
    p.add_argument("--da", default="constant:0.5")
    p.add_argument("--db", default="constant:0.5")
    p.add_argument("--phi", default="identity")
    p.add_argument("--cycle-lambda", type=float, default=10.0, dest="cycle_lambda")
    p.set_defaults(func=cmd_gan_loss)

    p = sub.add_parser("demo", help="write the bundled synthetic scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
