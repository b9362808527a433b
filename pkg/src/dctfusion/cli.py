"""Command-line entry point: ``dctfuse {fuse,blurgen,bench,selfcheck}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .evaluation import BlurSpec, Side, format_report, make_pairs, run_benchmark, synthetic_blur
from .focus import Metric
from .fusion import FusionConfig, TiePolicy, fuse
from .imaging import ImageFormatError, atomic_write, load_image, save_image
from .selfcheck import run_selfcheck

log = logging.getLogger("dctfusion")

IMAGE_SUFFIXES = {".pgm", ".png", ".jpg", ".jpeg"}


class CliError(Exception):
    pass


def _odd_window(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 3 or value % 2 == 0:
        raise argparse.ArgumentTypeError("window must be an odd integer >= 3")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def map_to_gray(dmap) -> np.ndarray:
    """Tile-resolution visualisation: first source 255, other sources 0, tie 128."""
    index = dmap.source_index()
    out = np.full(index.shape, 128, dtype=np.uint8)
    out[index == 0] = 255
    out[index > 0] = 0
    return out


def cmd_fuse(args: argparse.Namespace) -> int:
    if len(args.inputs) < 2:
        raise CliError("fuse needs at least two input images")
    images = [load_image(p) for p in args.inputs]
    config = FusionConfig(metric=Metric(args.method), cv_enabled=args.cv,
                          cv_window=args.cv_window, tie_policy=TiePolicy(args.tie))
    fused, dmap = fuse(images, config)
    save_image(fused, args.output)
    if args.map:
        if dmap is None:
            log.warning("--map ignored: the average method builds no decision map")
        else:
            save_image(map_to_gray(dmap), args.map)
    return 0


def cmd_blurgen(args: argparse.Namespace) -> int:
    image = load_image(args.input)
    out = synthetic_blur(image, BlurSpec(Side(args.side), args.mask))
    save_image(out, args.output)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise CliError(f"not a directory: {directory}")
    paths = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise CliError(f"no images found in {directory}")
    images = [load_image(p) for p in paths]
    pairs = make_pairs(images, [p.stem for p in paths])
    rows = run_benchmark(pairs)
    report = format_report(rows)
    atomic_write(args.report, report.encode())
    sys.stdout.write(report)
    return 0


def cmd_selfcheck(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    result = run_selfcheck(args.blocks, args.seed, args.tol)
    elapsed = time.perf_counter() - start
    print(f"selfcheck: {result.blocks} blocks, seed {result.seed}, tol {result.tol:g}")
    for c in result.checks:
        status = "ok" if c.first_failure is None else "FAIL"
        print(f"  {c.name:<14} max deviation {c.max_deviation:.3e}  {status}")
    print(f"  elapsed {elapsed:.2f}s")
    failed = result.first_failed
    if failed is not None:
        print(f"selfcheck failed: identity '{failed.name}' exceeded tolerance "
              f"at block index {failed.first_failure} (seed {result.seed})", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dctfuse",
        description="Multi-focus image fusion on 8x8 DCT blocks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("fuse", help="fuse two or more registered images")
    p.add_argument("inputs", nargs="+", metavar="IMAGE")
    p.add_argument("--method", choices=[m.value for m in Metric], default="vol")
    p.add_argument("--cv", action="store_true", help="apply consistency verification")
    p.add_argument("--cv-window", type=_odd_window, default=5, metavar="N")
    p.add_argument("--tie", choices=[t.value for t in TiePolicy], default="average")
    p.add_argument("-o", "--output", required=True, metavar="OUT")
    p.add_argument("--map", metavar="MAP.pgm", help="write the decision map as a PGM")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("blurgen", help="blur one half of an image with a box mask")
    p.add_argument("input", metavar="IMAGE")
    p.add_argument("--mask", type=int, choices=[5, 9], required=True)
    p.add_argument("--side", choices=[s.value for s in Side], required=True)
    p.add_argument("-o", "--output", required=True, metavar="OUT")
    p.set_defaults(func=cmd_blurgen)

    p = sub.add_parser("bench", help="half-blur benchmark over a directory of images")
    p.add_argument("--dir", required=True)
    p.add_argument("--report", required=True, metavar="OUT.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("selfcheck", help="verify DCT-domain formulas against pixel oracles")
    p.add_argument("--blocks", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=_nonneg_float, default=1e-6)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ImageFormatError, ValueError, OSError) as exc:
        print(f"dctfuse {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
