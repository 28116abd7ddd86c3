"""``motionbox`` command line: detect, make-dataset, eval, ablate, plot, track."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .core import Box, MotionBoxError, load_config, load_frame, save_gray_png
from .features import FeatureBackendSpec

log = logging.getLogger("motionbox")

EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # one machine-parsable line instead of argparse's usage dump
    def error(self, message):
        raise UsageError(message)


def _box_arg(text: str) -> Box:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,w,h numbers, got {text!r}")
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected x,y,w,h, got {text!r}")
    if vals[2] <= 0 or vals[3] <= 0:
        raise argparse.ArgumentTypeError("box width and height must be positive")
    return Box(*vals)


def _feature_spec(args) -> FeatureBackendSpec:
    if args.features == "raw":
        return FeatureBackendSpec.raw()
    if args.features == "hog":
        return FeatureBackendSpec.hog()
    if not args.model:
        raise UsageError("--features deep needs --model")
    return FeatureBackendSpec.deep(args.model, args.layer)


def _add_feature_flags(p):
    p.add_argument("--features", choices=("raw", "hog", "deep"), default="raw")
    p.add_argument("--model", help="ONNX feature extractor for --features deep")
    p.add_argument("--layer", default="layer14", help="tap tag recorded with the model")
    p.add_argument("--config", help="detector config (JSON or key = value)")


def _ensure_parent(path) -> None:
    parent = Path(path).parent
    parent.mkdir(parents=True, exist_ok=True)


# -- verbs ---------------------------------------------------------------------

def cmd_detect(args) -> int:
    from .boxopt import detect

    cfg = load_config(args.config)
    f1, f2 = load_frame(args.pair[0]), load_frame(args.pair[1])
    box, diag = detect(f1, f2, _feature_spec(args), cfg)
    if args.dump_masks:
        d = Path(args.dump_masks)
        d.mkdir(parents=True, exist_ok=True)
        if diag.motion.feature_mask is not None:
            save_gray_png(d / "feature_mask.png", diag.motion.feature_mask)
        save_gray_png(d / "frame_mask.png", diag.motion.frame_mask)
    if args.dump_maps:
        d = Path(args.dump_maps)
        d.mkdir(parents=True, exist_ok=True)
        for name, m in (("color", diag.color_map), ("location", diag.location_map)):
            if m is not None:
                save_gray_png(d / f"{name}_map.png", m)
        save_gray_png(d / "target_map.png", diag.target.values)
    if args.dump_trace:
        _ensure_parent(args.dump_trace)
        with open(args.dump_trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "x", "y", "w", "h", "score"])
            if diag.trace is not None:
                for row in diag.trace.rows():
                    w.writerow([row[0], *(f"{v:.6f}" for v in row[1:])])
    print(f"{box.x:.4f},{box.y:.4f},{box.w:.4f},{box.h:.4f},{diag.score:.6f}")
    return 0


def cmd_make_dataset(args) -> int:
    from .dataset import build_dataset, save_pairs, validate_dataset

    records = build_dataset(args.root, args.seed, args.exclude, args.reannotation)
    report = validate_dataset(records, check_files=not args.no_check)
    for pid, msg in report.violations:
        log.warning("%s: %s", pid, msg)
    _ensure_parent(args.out)
    save_pairs(args.out, records, seed=args.seed)
    log.info("wrote %d pairs to %s", len(records), args.out)
    if not report.ok and args.strict:
        raise MotionBoxError(f"dataset has {len(report.violations)} violations")
    return 0


def cmd_eval(args) -> int:
    from .dataset import load_pairs
    from .evalharness import evaluate, pipeline_detector, write_curves_csv, write_results_csv

    cfg = load_config(args.config)
    records = load_pairs(args.pairs)
    result = evaluate(records, pipeline_detector(_feature_spec(args), cfg), jobs=args.jobs)
    _ensure_parent(args.out)
    write_results_csv(args.out, result)
    label = args.label or args.features
    if args.curves:
        _ensure_parent(args.curves)
        write_curves_csv(args.curves, {label: result})
        if args.plots:
            _plot(args.curves, args.plots)
    elif args.plots:
        raise UsageError("--plots needs --curves")
    print(f"pairs={len(result.pairs)},auc={result.auc:.4f},pre30={result.pre30:.4f}")
    return 0


def cmd_ablate(args) -> int:
    from .dataset import load_pairs
    from .evalharness import parse_methods, run_ablation, write_curves_csv, write_table_csv

    cfg = load_config(args.config)
    try:
        methods = parse_methods(args.methods)
    except ValueError:
        raise UsageError(f"bad --methods value {args.methods!r}")
    backends = {}
    if args.layer14_model:
        backends["LAYER14"] = FeatureBackendSpec.deep(args.layer14_model, "layer14")
    if args.layer3_model:
        backends["LAYER3"] = FeatureBackendSpec.deep(args.layer3_model, "layer3")
    records = load_pairs(args.pairs)
    results = run_ablation(records, methods, backends, cfg, jobs=args.jobs)
    _ensure_parent(args.out)
    write_table_csv(args.out, results)
    if args.curves:
        _ensure_parent(args.curves)
        write_curves_csv(args.curves, {f"method{m}": r for m, r in results.items()})
        if args.plots:
            _plot(args.curves, args.plots)
    for m, r in results.items():
        print(f"method={m},auc={r.auc:.4f},pre30={r.pre30:.4f}")
    return 0


def _plot(curves_path, out_dir) -> list[str]:
    from .evalharness import read_curves_csv
    from .plotting import plot_curves

    curves = read_curves_csv(curves_path)
    if not curves:
        raise MotionBoxError(f"no curves found in {curves_path}")
    return plot_curves(curves, out_dir)


def cmd_plot(args) -> int:
    if not os.path.isfile(args.curves):
        raise FileNotFoundError(f"no such curves file: {args.curves}")
    for path in _plot(args.curves, args.out):
        print(path)
    return 0


def _sequence_frames(seq_dir) -> list[str]:
    from .dataset import IMAGE_SUFFIXES, _frame_dir

    seq = Path(seq_dir)
    if not seq.is_dir():
        raise FileNotFoundError(f"no such sequence directory: {seq_dir}")
    frames = sorted(str(p) for p in _frame_dir(seq).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not frames:
        raise MotionBoxError(f"no frames in {seq_dir}")
    return frames


def cmd_track(args) -> int:
    from .core import box_inside
    from .trackassist import baseline_track

    cfg = load_config(args.config)
    frames = [load_frame(p) for p in _sequence_frames(args.seq)]
    if not box_inside(args.init, frames[0].width, frames[0].height, tol=1e-6):
        raise MotionBoxError(f"initial box {args.init.as_tuple()} is outside the first frame")
    boxes = baseline_track(frames, args.init, assist=args.assist == "on", cfg=cfg,
                           spec=_feature_spec(args))
    _ensure_parent(args.out)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "x", "y", "w", "h"])
        for i, b in enumerate(boxes, start=1):
            w.writerow([i, *(f"{v:.4f}" for v in b.as_tuple())])
    log.info("tracked %d frames", len(boxes))
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for the stochastic steps (dataset intervals)")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = _Parser(prog="motionbox", description="Moving-target detection from image pairs.")
    p.add_argument("--version", action="version", version=f"motionbox {__version__}")
    p.add_argument("--seed", type=int, default=0, help="seed for the stochastic steps (dataset intervals)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True

    d = sub.add_parser("detect", parents=[common], help="detect the moving target in an image pair")
    d.add_argument("--pair", nargs=2, required=True, metavar=("IMG1", "IMG2"))
    _add_feature_flags(d)
    d.add_argument("--dump-masks", metavar="DIR")
    d.add_argument("--dump-maps", metavar="DIR")
    d.add_argument("--dump-trace", metavar="CSV")
    d.set_defaults(func=cmd_detect)

    m = sub.add_parser("make-dataset", parents=[common], help="build the pair dataset from sequences")
    m.add_argument("--root", required=True)
    m.add_argument("--exclude", help="sequence exclusion list")
    m.add_argument("--reannotation", help="directory of corrected <sequence>.txt files")
    m.add_argument("--out", required=True)
    m.add_argument("--no-check", action="store_true", help="skip file and bounds checks")
    m.add_argument("--strict", action="store_true", help="fail on validation violations")
    m.set_defaults(func=cmd_make_dataset)

    e = sub.add_parser("eval", parents=[common], help="evaluate one configuration on a pair dataset")
    e.add_argument("--pairs", required=True)
    _add_feature_flags(e)
    e.add_argument("--out", required=True, help="per-pair results CSV")
    e.add_argument("--curves", help="success/precision curves CSV")
    e.add_argument("--plots", metavar="DIR", help="also render the curves as PNG")
    e.add_argument("--label", help="column label in the curves CSV")
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", parents=[common], help="run the ablation matrix")
    a.add_argument("--pairs", required=True)
    a.add_argument("--methods", default="0-10")
    a.add_argument("--out", required=True, help="table CSV")
    a.add_argument("--curves", help="per-method curves CSV")
    a.add_argument("--plots", metavar="DIR")
    a.add_argument("--layer14-model")
    a.add_argument("--layer3-model")
    a.add_argument("--config")
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(func=cmd_ablate)

    pl = sub.add_parser("plot", parents=[common], help="render success/precision plots")
    pl.add_argument("--curves", required=True)
    pl.add_argument("--out", required=True, metavar="DIR")
    pl.set_defaults(func=cmd_plot)

    t = sub.add_parser("track", parents=[common], help="baseline tracker with optional assist")
    t.add_argument("--seq", required=True)
    t.add_argument("--init", type=_box_arg, required=True, help="centre-based x,y,w,h in frame 1")
    t.add_argument("--assist", choices=("on", "off"), default="off")
    t.add_argument("--out", required=True)
    _add_feature_flags(t)
    t.set_defaults(func=cmd_track)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MotionBoxError, OSError, ValueError, KeyError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
