"""Command line: render one figure spec to an image file."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .inputs import SpecError
from .render import load_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaugefigs",
        description="Render trajectory-archive figures from a JSON spec",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render one figure")
    p_render.add_argument("--spec", required=True, help="figure-spec JSON path")
    p_render.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        spec, base = load_spec(Path(args.spec))
    except (OSError, SpecError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2

    result = render(spec, base, Path(args.out))
    if result.skipped:
        report_path = Path(str(args.out) + ".skips.json")
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(
            json.dumps(result.skipped, indent=2, sort_keys=True) + "\n"
        )
        for entry in result.skipped:
            print(f"skipped: {entry['path']}: {entry['reason']}", file=sys.stderr)
    if result.n_series == 0:
        print("error: no usable input series", file=sys.stderr)
        return 1
    slope_note = (
        f", guide slope {result.guide_slope:.3f}"
        if result.guide_slope is not None
        else ""
    )
    print(f"rendered {result.n_series} series to {args.out}{slope_note}")
    return 0
