"""Command-line entry point: ``seqweak {sweep,point,frames,analyze,scan}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import plotting
from .detector import calibrate_origin, estimate_moments, read_frame, sample_frames, write_frame
from .errors import SeqWeakError
from .harness import (
    MODES,
    emit,
    load_spec,
    preset_spec,
    run_point,
    run_sweep,
    scan_table,
    with_seed,
)
from .pointer import couple_sequence, post_select
from .weakform import analytic_refs, approximation_error_scan, invert_moments

log = logging.getLogger("seqweak")


def _spec(args, mode=None):
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = preset_spec(args.preset)
    mode = mode or args.mode
    if mode is not None:
        if mode == "sampled" and spec.detector is None:
            spec = with_seed(spec, 0)
        spec = replace(spec, mode=mode)
    if args.seed is not None:
        spec = with_seed(spec, args.seed)
    return spec


def _common(p):
    p.add_argument("--spec", type=Path, help="experiment spec (JSON)")
    p.add_argument("--preset", choices=("hpost", "anomalous"), default="hpost",
                   help="built-in configuration used when --spec is absent")
    p.add_argument("--mode", choices=MODES, help="override the spec's mode")
    p.add_argument("--seed", type=int, help="master seed for sampled frames")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")


def _frames_in(paths):
    out = []
    for p in paths:
        p = Path(p)
        out.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return [read_frame(p) for p in out]


def cmd_sweep(args):
    spec = _spec(args)
    result = run_sweep(spec, workers=args.workers)
    formats = ("table", "plotdata") if args.format == "both" else (args.format,)
    for fmt in formats:
        print(emit(result, fmt, args.out, args.stem))
    if not args.no_figure:
        print(plotting.sweep_figure(result, args.out / f"{args.stem}.png", title=f"{spec.mode} mode"))
    for q, d in result.summary().items():
        log.info("max |%s - analytic| = %.3g", q, d)
    return 0


def cmd_point(args):
    spec = _spec(args)
    row = run_point(spec, args.theta)
    print(json.dumps(row._asdict(), default=float, indent=2))
    return 0


def cmd_frames(args):
    spec = _spec(args, mode="sampled")
    field = post_select(couple_sequence(spec.pre, args.theta, spec.g_x, spec.g_y, spec.sigma),
                        spec.post)
    n = spec.n_signal_photons // spec.n_frames
    frames = sample_frames(field, spec.detector, n, spec.n_frames)
    args.out.mkdir(parents=True, exist_ok=True)
    for f in frames:
        write_frame(f, args.out / f"frame_{f.frame_index:04d}.json")
    print(f"wrote {len(frames)} frames to {args.out}")
    if not args.no_figure:
        print(plotting.frame_figure(frames[0].counts, spec.detector, args.out / "frame_0000.png"))
    return 0


def cmd_analyze(args):
    spec = _spec(args)
    frames = _frames_in(args.frames)
    if not frames:
        raise SeqWeakError("no frame files found")
    if args.calibration:
        cfg = calibrate_origin(frames[0].config, _frames_in([args.calibration]))
        frames = [replace(f, config=replace(f.config, origin_offset=cfg.origin_offset))
                  for f in frames]
    est = estimate_moments(frames, method=args.method)
    refs = analytic_refs(spec.coupling(args.theta)) if args.theta is not None else None
    report = invert_moments(est, spec.g_x, spec.g_y, states=(spec.pre, spec.post), analytic=refs)
    doc = asdict(report)
    doc["analytic_refs"] = None if refs is None else refs._asdict()
    doc["n_frames"] = est.n_frames
    doc["n_events"] = est.n_events
    text = json.dumps(doc, indent=2, default=lambda v: None if math.isnan(v) else v)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_scan(args):
    spec = _spec(args)
    cfg = spec.coupling(args.theta)
    scan = approximation_error_scan(cfg, args.ratios, check=not args.no_check)
    print(scan_table(scan, args.out, args.stem))
    if not args.no_figure:
        print(plotting.scan_figure(scan, args.out / f"{args.stem}.png"))
    for q, s in scan.slopes.items():
        print(f"{q}: slope={'degenerate' if s is None else f'{s:.3f}'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqweak", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a theta sweep")
    _common(p)
    p.add_argument("--format", choices=("table", "plotdata", "both"), default="table",
                   help="delimited output layout")
    p.add_argument("--stem", default="sweep", help="output file stem")
    p.add_argument("--workers", type=int, default=1, help="threads over theta points")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("point", help="evaluate a single theta")
    _common(p)
    p.add_argument("--theta", type=float, required=True, help="half-wave plate angle (rad)")
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("frames", help="dump simulated detector frames")
    _common(p)
    p.add_argument("--theta", type=float, required=True, help="half-wave plate angle (rad)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_frames)

    p = sub.add_parser("analyze", help="estimate weak values from frame files")
    _common(p)
    p.add_argument("frames", nargs="+", help="frame files or directories")
    p.add_argument("--theta", type=float, help="theta for analytic reference values")
    p.add_argument("--calibration", type=Path, help="frames taken with couplings off")
    p.add_argument("--method", choices=("frames", "bootstrap"), default="frames",
                   help="standard error estimator")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="approximation error against g/sigma")
    _common(p)
    p.add_argument("--theta", type=float, default=math.pi / 4, help="half-wave plate angle (rad)")
    p.add_argument("--ratios", type=float, nargs="+", default=[0.3, 0.15, 0.075, 0.0375],
                   help="g/sigma values to scan")
    p.add_argument("--stem", default="scan", help="output file stem")
    p.add_argument("--no-check", action="store_true",
                   help="report slopes without enforcing the convergence window")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SeqWeakError, OSError) as exc:
        print(f"seqweak: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
