"""Command-line renderer.

Exit codes: 0 success, 64 usage error, 65 schema/data error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .io import SchemaError

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_DATA = 65


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qlev-plots",
        description="Render a figure from qlev output files.",
    )
    parser.add_argument("--kind", required=True, help=" | ".join(KINDS))
    parser.add_argument("--json", help="report JSON (phase-trace, hexagon-trace)")
    parser.add_argument("--csv", help="trace/manifest CSV")
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    spec = FigureSpec(kind=args.kind, out_path=args.out, json_path=args.json, csv_path=args.csv)
    try:
        meta = render(spec)
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {meta['out']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
