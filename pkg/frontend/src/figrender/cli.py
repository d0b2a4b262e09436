"""Command line: figrender render --figure fig2a --in fig2a.csv --out fig2a.svg"""

from __future__ import annotations

import argparse
import sys

from .render import EXPECTED_COLUMNS, RenderSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figrender")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one dataset into a static image")
    p.add_argument("--figure", required=True, choices=sorted(EXPECTED_COLUMNS))
    p.add_argument("--in", dest="csv_path", required=True, help="input CSV dataset")
    p.add_argument("--out", dest="image_path", required=True, help="output .svg or .png")
    p.add_argument("--title", default=None)
    return parser


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = RenderSpec(args.figure, args.csv_path, args.image_path, args.title)
        path = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


def main() -> None:
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
