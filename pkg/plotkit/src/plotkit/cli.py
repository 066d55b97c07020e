"""Command line front end: plotkit --bundle DIR --figures all|KIND --out DIR."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, PlotkitError, render_bundle


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render result figures from a solver CSV bundle.")
    parser.add_argument("--bundle", required=True,
                        help="bundle directory (per-scheme subdirectories or flat)")
    parser.add_argument("--figures", default="all",
                        choices=("all",) + FIGURE_KINDS,
                        help="which figure kind to render (default: all)")
    parser.add_argument("--out", required=True, help="output directory for images")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        written = render_bundle(args.bundle, args.out, args.figures)
    except PlotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
