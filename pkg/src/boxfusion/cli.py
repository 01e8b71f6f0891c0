"""Command-line entry point: ``boxfusion {fuse,eval,curve,sweep,bnn-demo}``.

Exit status is 0 on success, 1 on invalid input or flags, 2 on internal
errors.  Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

from . import bnn
from .evaluation import pr_curve
from .io import (
    FORMATS,
    fmt_float,
    load_ground_truth,
    load_predictions,
    write_fused,
    write_metrics,
    write_pr_curve,
)
from .pipeline import METHODS, SWEEP_THRESHOLDS, evaluate, fuse_index, single_model, sweep
from .plot import render_pr_svg

BNN_REGIONS = 1000
BNN_NOISE = 0.05
BNN_HOLDOUT = 500


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; bad flags are input errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _unit_open(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _unit_closed(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boxfusion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p: argparse.ArgumentParser, preds: bool = True, gt: bool = False) -> None:
        if preds:
            p.add_argument("predictions", nargs="+", type=Path,
                           help="prediction files, one per model")
        if gt:
            p.add_argument("--gt", type=Path, required=True, help="ground-truth file")
        p.add_argument("--format", choices=FORMATS, default=None,
                       help="record format (default: from file extension)")

    def add_fusion(p: argparse.ArgumentParser) -> None:
        p.add_argument("--method", choices=METHODS, default="wbf")
        p.add_argument("--thr", type=_unit_open, default=0.7,
                       help="IoU threshold for fusion / suppression (default 0.7)")
        p.add_argument("--clamp", action="store_true",
                       help="cap rescaled WBF confidences at 1")

    p = sub.add_parser("fuse", help="fuse predictions from one or more models")
    add_common(p)
    add_fusion(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", help="precision/recall/F1 and AP against ground truth")
    add_common(p, gt=True)
    add_fusion(p)
    p.add_argument("--iou-thr", type=_unit_open, default=0.5)
    p.add_argument("--score-thr", type=_unit_closed, default=0.0,
                   help="operating confidence for P/R/F1 (default 0, all boxes)")
    p.add_argument("--out", type=Path, help="metrics JSON file")

    p = sub.add_parser("curve", help="precision-recall curves as CSV or SVG")
    add_common(p, gt=True)
    add_fusion(p)
    p.add_argument("--iou-thr", type=_unit_open, default=0.5)
    p.add_argument("--out", type=Path, required=True, help=".csv or .svg output")

    p = sub.add_parser("sweep", help="WBF threshold sweep (AP per fusion threshold)")
    add_common(p, gt=True)
    p.add_argument("--thr", type=_unit_open, nargs="+", default=list(SWEEP_THRESHOLDS))
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--out", type=Path, help="CSV table")

    p = sub.add_parser("bnn-demo", help="train the toy bridge network on synthetic pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=_unit_closed, default=0.5,
                   help="match threshold on the bridge distance")
    p.add_argument("--out", type=Path, help="metrics JSON file")
    p.add_argument("--save-params", type=Path, help="write trained parameters here")
    return parser


def _load_for_eval(paths, fmt):
    # fused files may carry rescaled confidences above 1; only ranking matters here
    return load_predictions(paths, fmt, max_score=None)


def _load_detections(args) -> dict:
    index = _load_for_eval(args.predictions, args.format)
    if len(args.predictions) == 1:
        return single_model(index)
    return fuse_index(index, args.method, args.thr, args.clamp)


def cmd_fuse(args) -> int:
    index = load_predictions(args.predictions, args.format)
    fused = fuse_index(index, args.method, args.thr, args.clamp)
    write_fused(fused, args.out, args.format)
    n_in = sum(len(dets) for v in index.values() for dets in v)
    n_out = sum(len(v) for v in fused.values())
    print(f"{args.method}: {n_in} boxes in, {n_out} boxes out, {len(fused)} images -> {args.out}")
    return 0


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))  # noqa: E731
    return "\n".join([line(header)] + [line(r) for r in rows])


def cmd_eval(args) -> int:
    dets = _load_detections(args)
    gts = load_ground_truth(args.gt, args.format)
    row = evaluate(dets, gts, args.iou_thr, args.score_thr)
    m, r = row.metrics, row.report
    values = [m.precision, m.recall, m.f1, r.ap50, r.ap75, r.ap_range]
    print(_table(["Precision", "Recall", "F1", "AP_0.5", "AP_0.75", "AP"],
                 [[f"{v:.4f}" for v in values]]))
    if args.out is not None:
        write_metrics(m, r, args.out)
    return 0


def cmd_curve(args) -> int:
    gts = load_ground_truth(args.gt, args.format)
    named = []
    for path in args.predictions:
        dets = single_model(_load_for_eval([path], args.format))
        named.append((path.stem, pr_curve(dets, gts, args.iou_thr)))
    if len(args.predictions) > 1:
        dets = _load_detections(args)
        named.append((args.method, pr_curve(dets, gts, args.iou_thr)))
    if args.out.suffix.lower() == ".svg":
        render_pr_svg(named, args.out)
        print(f"{len(named)} curve(s) -> {args.out}")
        return 0
    if len(named) == 1:
        write_pr_curve(named[0][1], args.out)
        print(f"1 curve -> {args.out}")
        return 0
    for name, curve in named:
        target = args.out.with_name(f"{args.out.stem}_{name}{args.out.suffix}")
        write_pr_curve(curve, target)
        print(f"{name} -> {target}")
    return 0


def cmd_sweep(args) -> int:
    if len(args.predictions) < 2:
        raise UsageError("sweep needs at least two prediction files")
    index = load_predictions(args.predictions, args.format)
    gts = load_ground_truth(args.gt, args.format)
    rows = sweep(index, gts, args.thr, args.clamp)
    header = ["thr", "AP_0.5", "AP_0.75", "AP"]
    print(_table(header, [[f"{t:g}", f"{r.ap50:.4f}", f"{r.ap75:.4f}", f"{r.ap_range:.4f}"]
                          for t, r in rows]))
    if args.out is not None:
        lines = ["# thr,ap50,ap75,ap"]
        lines += [",".join(fmt_float(v) for v in (t, r.ap50, r.ap75, r.ap_range)) for t, r in rows]
        args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_bnn_demo(args) -> int:
    config = bnn.BnnConfig(seed=args.seed)
    data = bnn.generate_synthetic_pairs(BNN_REGIONS, BNN_NOISE, args.seed)
    train, test = bnn.split_dataset(data, BNN_HOLDOUT, args.seed)
    params = bnn.train_bnn(train, config)
    result = bnn.evaluate_pairs(test, params, args.gamma)
    summary = {
        "seed": args.seed,
        "gamma": args.gamma,
        "train_pairs": len(train),
        "test_pairs": result.n_pairs,
        "train_loss": float(fmt_float(bnn.bnn_loss(train, params, config.alpha))),
        "accuracy": float(fmt_float(result.accuracy)),
        "precision": float(fmt_float(result.precision)),
        "recall": float(fmt_float(result.recall)),
    }
    print(_table(["Accuracy", "Precision", "Recall"],
                 [[f"{result.accuracy:.4f}", f"{result.precision:.4f}", f"{result.recall:.4f}"]]))
    if args.out is not None:
        args.out.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if args.save_params is not None:
        bnn.save_params(params, args.save_params)
    return 0


COMMANDS = {
    "fuse": cmd_fuse,
    "eval": cmd_eval,
    "curve": cmd_curve,
    "sweep": cmd_sweep,
    "bnn-demo": cmd_bnn_demo,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            return COMMANDS[args.command](args)
        except (UsageError, ValueError, OSError) as exc:
            print(f"boxfusion: error: {exc}", file=sys.stderr)
            return 1
        except Exception as exc:  # noqa: BLE001
            print(f"boxfusion: internal error: {exc!r}", file=sys.stderr)
            return 2


def _show_warning(message, category, filename, lineno, file=None, line=None) -> None:
    print(f"boxfusion: warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
