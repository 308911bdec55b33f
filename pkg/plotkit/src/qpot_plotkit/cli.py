"""qpot-plot: render figures from a qpot result directory."""

from __future__ import annotations

import argparse
import logging
import sys

from .reader import ResultFormatError
from .render import FIGURE_KINDS, PlotJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpot-plot", description=__doc__)
    parser.add_argument("result_dir", help="scenario result directory (with manifest.json)")
    parser.add_argument("--figure", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--colormap", default="Blues")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    job = PlotJob(args.result_dir, args.figure, args.out, colormap=args.colormap, dpi=args.dpi)
    try:
        payload = render(job)
    except ResultFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({payload['figure']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
