"""Command-line surface: single-image detection, mask evaluation, and
multi-variant comparison runs.

Outputs are deterministic (sorted JSON keys, no timestamps) and written
atomically via a temp file and rename, so interrupted runs never leave
half-written artifacts behind.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .colorspace import FeaturePair
from .evaluation import (ImageEval, Variant, build_report, confusion,
                         format_report_table, load_dataset, metrics,
                         report_payload, reports_to_csv, run_comparison)
from .exceptions import SkinfuseError
from .face_region import EyePair, PreprocessConfig, load_annotations
from .imaging import RgbImage, load_mask_png, load_png, save_mask_png, save_png
from .skin_model import DetectorParams, FusionMode, detect

__all__ = ["main", "build_parser", "RunConfig", "build_run_config",
           "load_config_file"]


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_CONFIG_PARSERS = {
    "feature": str,
    "mode": str,
    "bins_a": int,
    "bins_b": int,
    "lambda": float,
    "hist_threshold": float,
    "boundary_scale": float,
    "literal_variance_axes": _parse_bool,
    "exact_ellipse": _parse_bool,
    "minor_axis_factor": float,
    "major_axis_factor": float,
    "axes_are_full_lengths": _parse_bool,
    "edge_threshold": int,
    "dilate_radius": int,
    "dilate_iterations": int,
    "rotate_with_eye_line": _parse_bool,
}


def load_config_file(path):
    """Flat ``key = value`` file; blank lines and # comments are skipped.

    Keys outside the known vocabulary are rejected so typos fail loudly
    instead of silently running with defaults.
    """
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


@dataclass(frozen=True)
class RunConfig:
    """Effective parameter set of one run, echoed into every report."""

    feature: FeaturePair
    mode: FusionMode
    params: DetectorParams
    preprocess: PreprocessConfig

    def echo(self):
        p, pre = self.params, self.preprocess
        return {
            "feature": self.feature.token,
            "mode": self.mode.token,
            "bins_a": p.bins_a,
            "bins_b": p.bins_b,
            "lambda": p.lambda_,
            "hist_threshold": p.hist_threshold,
            "boundary_scale": p.boundary_scale,
            "literal_variance_axes": p.literal_variance_axes,
            "exact_ellipse": p.exact_ellipse,
            "minor_axis_factor": pre.minor_axis_factor,
            "major_axis_factor": pre.major_axis_factor,
            "axes_are_full_lengths": pre.axes_are_full_lengths,
            "edge_threshold": pre.edge_threshold,
            "dilate_radius": pre.dilate_radius,
            "dilate_iterations": pre.dilate_iterations,
            "rotate_with_eye_line": pre.rotate_with_eye_line,
        }


def build_run_config(values):
    """Typed RunConfig from string key=value pairs (file merged with flags)."""
    typed = {}
    for key, raw in values.items():
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"unknown config key {key!r}")
        typed[key] = _CONFIG_PARSERS[key](raw) if isinstance(raw, str) else raw
    params = DetectorParams(
        bins_a=typed.get("bins_a", 64),
        bins_b=typed.get("bins_b", 64),
        lambda_=typed.get("lambda", 10.0),
        hist_threshold=typed.get("hist_threshold", 20.0),
        boundary_scale=typed.get("boundary_scale", 2.0),
        literal_variance_axes=typed.get("literal_variance_axes", False),
        exact_ellipse=typed.get("exact_ellipse", False),
    )
    defaults = PreprocessConfig()
    preprocess = PreprocessConfig(
        minor_axis_factor=typed.get("minor_axis_factor", defaults.minor_axis_factor),
        major_axis_factor=typed.get("major_axis_factor", defaults.major_axis_factor),
        axes_are_full_lengths=typed.get("axes_are_full_lengths",
                                        defaults.axes_are_full_lengths),
        edge_threshold=typed.get("edge_threshold", defaults.edge_threshold),
        dilate_radius=typed.get("dilate_radius", defaults.dilate_radius),
        dilate_iterations=typed.get("dilate_iterations", defaults.dilate_iterations),
        rotate_with_eye_line=typed.get("rotate_with_eye_line",
                                       defaults.rotate_with_eye_line),
    )
    return RunConfig(
        feature=FeaturePair.from_token(typed.get("feature", "iby")),
        mode=FusionMode.from_token(typed.get("mode", "fusion")),
        params=params,
        preprocess=preprocess,
    )


def _atomic_write_text(path, text):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".",
                               prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save(path, saver):
    """Run ``saver(tmp_path)`` then rename over ``path``."""
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".",
                               prefix=path.name + ".")
    os.close(fd)
    try:
        saver(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _parse_eye_flag(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"--eyes expects x1,y1,x2,y2, got {text!r}")
    x1, y1, x2, y2 = (float(p) for p in parts)
    return EyePair((x1, y1), (x2, y2))


def _overlay_image(img, mask):
    """Source image with detected skin blended half-and-half toward red."""
    pixels = img.pixels.astype(np.float64)
    tinted = np.floor(pixels * 0.5 + np.array([255.0, 0.0, 0.0]) * 0.5 + 0.5)
    out = np.where(mask.pixels[:, :, None], tinted, pixels)
    return RgbImage(out.astype(np.uint8))


def _split_tokens(text):
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_detect(args):
    values = load_config_file(args.config) if args.config else {}
    if args.feature:
        values["feature"] = args.feature
    if args.mode:
        values["mode"] = args.mode
    run = build_run_config(values)

    img = load_png(args.image)
    if args.eyes:
        eyes = [_parse_eye_flag(flag) for flag in args.eyes]
    elif args.annotations:
        table = load_annotations(args.annotations)
        eyes = list(table.get(Path(args.image).name, []))
    else:
        eyes = []

    def warn(reason):
        print(f"warning: {reason}; writing blank mask", file=sys.stderr)

    mask = detect(img, eyes, pair=run.feature, cfg=run.preprocess,
                  params=run.params, mode=run.mode, on_fallback=warn)
    _atomic_save(args.out, lambda p: save_mask_png(mask, p))
    if args.overlay:
        overlay = _overlay_image(img, mask)
        _atomic_save(args.overlay, lambda p: save_png(overlay, p))
    return 0


def cmd_eval(args):
    pred_dir = Path(args.pred_dir)
    truth_dir = Path(args.truth_dir)
    paired = [(p, truth_dir / p.name) for p in sorted(pred_dir.glob("*.png"))
              if (truth_dir / p.name).exists()]
    if not paired:
        print("error: no matching prediction/truth pairs", file=sys.stderr)
        return 2
    rows = []
    skipped = []
    for pred_path, truth_path in paired:
        try:
            conf = confusion(load_mask_png(pred_path), load_mask_png(truth_path))
        except (SkinfuseError, ValueError) as exc:
            skipped.append((pred_path.name, str(exc)))
            continue
        rows.append(ImageEval(pred_path.name, conf, metrics(conf)))
    if not rows:
        print("error: every pair failed to evaluate", file=sys.stderr)
        return 2
    report = build_report("masks", rows, skipped)
    sys.stdout.write(format_report_table([report]))
    if args.report:
        echo = {"pred_dir": str(pred_dir), "truth_dir": str(truth_dir)}
        _atomic_write_text(args.report, _dump_json(report_payload([report], echo)))
    return 0


def cmd_compare(args):
    values = load_config_file(args.config) if args.config else {}
    run = build_run_config(values)
    variants = ([Variant("feature", t) for t in _split_tokens(args.features)]
                + [Variant("mode", t) for t in _split_tokens(args.modes)]
                + [Variant("baseline", t) for t in _split_tokens(args.baselines)])
    if not variants:
        print("error: nothing to compare; pass --features, --modes or"
              " --baselines", file=sys.stderr)
        return 2
    items = load_dataset(args.dataset)
    reports = run_comparison(items, variants, params=run.params,
                             cfg=run.preprocess, mode_pair=run.feature,
                             jobs=args.jobs)
    sys.stdout.write(format_report_table(reports))
    if args.csv:
        _atomic_write_text(args.csv, reports_to_csv(reports))
    if args.json:
        echo = run.echo()
        echo["dataset"] = str(args.dataset)
        _atomic_write_text(args.json, _dump_json(report_payload(reports, echo)))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="skinfuse",
        description="Fusion-based skin detection: per-image color models "
                    "seeded from an eye-anchored face region.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="classify one image and write the mask")
    p.add_argument("--image", required=True, help="input PNG")
    p.add_argument("--eyes", action="append", metavar="X1,Y1,X2,Y2",
                   help="one eye pair; repeat the flag for several faces")
    p.add_argument("--annotations", help="annotation JSON, matched by file name")
    p.add_argument("--feature", help="feature pair (iby, hs, hv, sv, ycb, ycr, cbcr)")
    p.add_argument("--mode", help="fusion, hist or gmm")
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--overlay", help="also write the input with skin tinted red")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score predicted masks against truth masks")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--truth-dir", required=True)
    p.add_argument("--report", help="write the full report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare",
                       help="evaluate feature pairs, fusion modes and baselines "
                            "over a dataset (images/, truth/, annotations.json)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", help="comma list of feature pairs")
    p.add_argument("--modes", help="comma list of fusion modes; they run over "
                                   "the configured feature pair")
    p.add_argument("--baselines", help="comma list: sobottka_hs, wang_yuan")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--csv", help="write aggregate rows as CSV")
    p.add_argument("--json", help="write the full report as JSON")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel image workers (default 1)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SkinfuseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
