"""Command line: plot <dir> --fig trajectories|errors|events [--window a b] --out <path>.

Exit codes: 0 success, 1 usage, 2 unreadable or malformed input.
"""

import argparse
import sys

from .artifacts import SchemaMismatch
from .figures import FIGURES, FigureSpec, render_figures

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="plot",
        description="Render figures from a simulation run directory.",
    )
    parser.add_argument("run_dir", help="directory with trace.csv, events.csv, metrics.json")
    parser.add_argument("--fig", required=True, choices=FIGURES, help="figure type")
    parser.add_argument(
        "--window", nargs=2, type=float, metavar=("START", "END"),
        help="time window, must lie inside the trace range",
    )
    parser.add_argument("--out", required=True, help="output path (.png/.svg both written)")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        spec = FigureSpec(
            run_dir=args.run_dir,
            figure=args.fig,
            out=args.out,
            window=None if args.window is None else tuple(args.window),
        )
        paths = render_figures(spec)
    except (SchemaMismatch, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
