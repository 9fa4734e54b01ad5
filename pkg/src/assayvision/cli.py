"""Command-line front end.

Exit codes: 0 success, 2 too few assays detected, 3 I/O or image format
error, 4 invalid config, spec or command line.

Settings precedence, lowest to highest: built-in defaults, the file named by
``$ASSAYVISION_CONFIG`` (only when ``--config`` is absent), ``--config``,
explicit command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import plotting
from .blobdetect import order_contours, select_top_k
from .config import ConfigError, load_config, override
from .errors import ImageIOError, InsufficientAssays, InvalidParams, InvalidSpec, UnsupportedFormat
from .imagecore import load_image, save_gray, save_image, save_mask
from .quantify import analyze_pair, locate_assays, run_detection
from .report import format_table, write_report
from .synthgen import SceneSpec, generate_pair, sweep

log = logging.getLogger("assayvision")

EXIT_OK = 0
EXIT_INSUFFICIENT = 2
EXIT_IO = 3
EXIT_CONFIG = 4

STAGE_FILES = ("yellow_mask.png", "clean_mask.png", "dog.png", "blob_mask.png", "contours.png")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline overrides")
    g.add_argument("--kernel-size", type=int, dest="kernel_size")
    g.add_argument("--morph-order", choices=("open-close", "close-open"), dest="morph_order")
    g.add_argument("--sigma1", type=float)
    g.add_argument("--sigma2", type=float)
    g.add_argument("--t-blob", type=float, dest="t_blob")
    g.add_argument("--expected-count", type=int, dest="expected_count")
    g.add_argument("--dog-scale", choices=("peak", "raw"), dest="dog_scale")
    g.add_argument("--margin", type=int, dest="crop_margin")


def _resolve_config(args, **extra):
    cfg = load_config(args.config)
    return override(
        cfg,
        kernel_size=args.kernel_size,
        morph_order=args.morph_order,
        sigma1=args.sigma1,
        sigma2=args.sigma2,
        t_blob=args.t_blob,
        expected_count=args.expected_count,
        dog_scale=args.dog_scale,
        crop_margin=args.crop_margin,
        **extra,
    )


def cmd_analyze(args) -> int:
    cfg = _resolve_config(
        args,
        out_dir=args.out,
        format=args.format,
        overlay=True if args.overlay else None,
        figures=False if args.no_figures else None,
    )
    paths = {"base": Path(args.base), "exposed": Path(args.exposed)}
    images = {name: load_image(p) for name, p in paths.items()}
    inputs = {name: {"path": str(p), "sha256": _file_sha256(p)} for name, p in paths.items()}

    report = analyze_pair(images["base"], images["exposed"], cfg.params, inputs=inputs)

    out_dir = Path(cfg.output.out_dir)
    written = write_report(report, out_dir, cfg.output.format)
    if cfg.output.figures:
        written.append(plotting.plot_channel_bars(report, out_dir / "channels.png"))
    if cfg.output.overlay:
        notes = plotting.delta_notes(report)
        for name, img in images.items():
            contours, _ = locate_assays(img, cfg.params, name)
            overlay = plotting.draw_overlay(img, contours, notes if name == "exposed" else None)
            target = out_dir / f"overlay_{name}.png"
            save_image(overlay, target)
            written.append(target)

    print(format_table(report))
    for w in report.warnings:
        print(f"warning: {w}")
    for p in written:
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _resolve_config(args, out_dir=args.out)
    img = load_image(args.image)
    det = run_detection(img, cfg.params)
    found = det.contours
    k = min(len(found), cfg.params.blob.expected_count)
    # detect reports what it sees; it never enforces expected_count
    shown = order_contours(select_top_k(found, replace(cfg.params.blob, expected_count=k))) if k else found

    if args.dump_stages:
        out = Path(cfg.output.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_mask(det.yellow_mask, out / STAGE_FILES[0])
        save_mask(det.clean_mask, out / STAGE_FILES[1])
        span = float(det.dog.max() - det.dog.min())
        view = (det.dog - det.dog.min()) / span * 255 if span > 0 else np.zeros_like(det.dog)
        save_gray(np.floor(view + 0.5), out / STAGE_FILES[2])
        save_mask(det.blob_mask, out / STAGE_FILES[3])
        save_image(plotting.draw_overlay(img, shown), out / STAGE_FILES[4])

    print(f"{len(found)} region(s) found, showing {len(shown)}")
    print(f"{'index':>5} {'centroid_x':>11} {'centroid_y':>11} {'area_px':>8}  bbox")
    for i, c in enumerate(shown, start=1):
        print(f"{i:>5} {c.centroid[0]:11.2f} {c.centroid[1]:11.2f} {c.filled_area:>8}  {c.bbox.as_list()}")
    return EXIT_OK


def _load_spec(args) -> SceneSpec:
    if args.spec:
        try:
            data = yaml.safe_load(Path(args.spec).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise InvalidSpec(f"cannot parse {args.spec}: {exc}") from exc
        spec = SceneSpec.from_dict(data)
    else:
        spec = SceneSpec()
    return spec


def cmd_gen(args) -> int:
    spec = _load_spec(args)
    if args.seed is not None:
        spec = SceneSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    base, exposed, gt = generate_pair(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(base, out / "base.png")
    save_image(exposed, out / "exposed.png")
    doc = {"spec": spec.to_dict(), **gt.to_dict()}
    (out / "gt.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out / 'base.png'}, {out / 'exposed.png'}, {out / 'gt.json'}")
    return EXIT_OK


SWEEP_COLUMNS = ("radius", "blur_sigma", "noise_sigma", "runs", "failures", "mean_abs_error", "max_abs_error")


def cmd_sweep(args) -> int:
    """Mean |delta error| against ground truth for each radius/blur/noise combination."""
    if args.seeds < 1:
        raise InvalidSpec("--seeds must be at least 1")
    cfg = _resolve_config(args, out_dir=args.out)
    spec = _load_spec(args)
    ranges = {"radius": args.radius, "blur_sigma": args.blur, "noise_sigma": args.noise}
    ranges = {k: v for k, v in ranges.items() if v}
    ranges["seed"] = list(range(args.seeds))
    groups: dict[tuple, dict] = {}
    for scene in sweep(spec, ranges):
        key = (scene.discs[0].radius, scene.blur_sigma, scene.noise_sigma)
        g = groups.setdefault(key, {"runs": 0, "failures": 0, "errors": []})
        g["runs"] += 1
        base, exposed, gt = generate_pair(scene)
        try:
            report = analyze_pair(base, exposed, cfg.params)
        except InsufficientAssays:
            g["failures"] += 1
            continue
        for a, t in zip(report.assays, gt.discs):
            for ch in ("blue", "green", "red"):
                g["errors"].append(abs(getattr(a.delta, f"delta_{ch}") - getattr(t.delta, f"delta_{ch}")))

    out = Path(cfg.output.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for (radius, blur, noise), g in groups.items():
        errs = g["errors"]
        mean = float(np.mean(errs)) if errs else float("nan")
        worst = float(np.max(errs)) if errs else float("nan")
        rows.append((radius, blur, noise, g["runs"], g["failures"], round(mean, 6), round(worst, 6)))
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    labels = [f"r={r:g} blur={b:g} noise={n:g}" for r, b, n, *_ in rows]
    plotting.plot_sweep(labels, [r[5] for r in rows], out / "sweep.png")

    print(f"{'radius':>6} {'blur':>5} {'noise':>5} {'fail':>4} {'mean_err':>9} {'max_err':>8}")
    for r in rows:
        print(f"{r[0]:6g} {r[1]:5g} {r[2]:5g} {r[4]:4d} {r[5]:9.3f} {r[6]:8.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="assayvision", description="Colorimetric swab assay analysis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="compare a base and an exposed capture")
    a.add_argument("base")
    a.add_argument("exposed")
    a.add_argument("--config")
    a.add_argument("--out")
    a.add_argument("--overlay", action="store_true", help="write annotated overlay PNGs")
    a.add_argument("--format", choices=("json", "csv"))
    a.add_argument("--no-figures", action="store_true", help="skip the channel bar chart")
    _param_flags(a)
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("detect", help="run detection on one image and list the regions")
    d.add_argument("image")
    d.add_argument("--config")
    d.add_argument("--out")
    d.add_argument("--dump-stages", action="store_true", help="write the intermediate rasters as PNGs")
    _param_flags(d)
    d.set_defaults(func=cmd_detect)

    g = sub.add_parser("gen", help="render a synthetic base/exposed pair with ground truth")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--spec")
    src.add_argument("--preset", choices=("default",))
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    w = sub.add_parser("sweep", help="measure delta error over a grid of synthetic scenes")
    src = w.add_mutually_exclusive_group()
    src.add_argument("--spec")
    src.add_argument("--preset", choices=("default",))
    w.add_argument("--radius", type=float, nargs="+")
    w.add_argument("--blur", type=float, nargs="+")
    w.add_argument("--noise", type=float, nargs="+")
    w.add_argument("--seeds", type=int, default=10, help="seeds per grid point (default 10)")
    w.add_argument("--config")
    w.add_argument("--out", required=True)
    _param_flags(w)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InsufficientAssays as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (ConfigError, InvalidParams, InvalidSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ImageIOError, UnsupportedFormat, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
