"""`render` command line tool: preset figures from btckur CSV outputs."""

from __future__ import annotations

import argparse
import sys

from .reader import CsvFormatError, MissingColumnError
from .render import render
from .specs import build_spec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render preset figures from btckur CSV outputs.",
    )
    parser.add_argument("--preset", required=True, choices=("fig2", "fig3", "figS1"))
    parser.add_argument("--input-dir", required=True,
                        help="directory containing the preset's CSV files")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)

    try:
        spec = build_spec(args.preset, args.input_dir)
        render(spec, args.out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvFormatError, MissingColumnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
