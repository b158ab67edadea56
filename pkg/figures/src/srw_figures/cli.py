"""Console entry point: ``render_figures <experiment> --in DIR --out DIR``.

Reads ``<in>/<experiment>.csv`` and ``<in>/<experiment>.schema.json``,
writes ``<out>/<experiment>.pdf``. Exit code 0 on success, 2 on any
input problem (missing files, schema mismatch, empty data), with a
single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import FigureError
from .extract import EXPERIMENT_FIGURES
from .render import FigureSpec, render

EXIT_OK = 0
EXIT_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render one experiment's CSV bundle to a vector figure.",
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENT_FIGURES),
                        help="experiment bundle to render")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding <experiment>.csv and <experiment>.schema.json")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory the figure is written into")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
    spec = FigureSpec(
        experiment=args.experiment,
        csv_path=in_dir / f"{args.experiment}.csv",
        schema_path=in_dir / f"{args.experiment}.schema.json",
        out_path=out_dir / f"{args.experiment}.pdf",
    )
    try:
        out_path = render(spec)
    except (FigureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(out_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
