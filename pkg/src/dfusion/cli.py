"""Command-line interface: sweep / plot / bound subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .mgf import observation_bound
from .sweep import (ResultTable, parse_bound_csv, parse_curve_csv, run_sweep)
from .svgplot import render_plot


def _cmd_sweep(args) -> int:
    try:
        config = parse_config(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table, errors = run_sweep(config, output_dir=args.output_dir)
    print(f"wrote {len(table.rows)} curve rows for "
          f"{len(config.scenarios()) - len(errors)} scenario(s)")
    for sid, message in sorted(errors.items()):
        print(f"error in {sid}: {message}", file=sys.stderr)
    return 1 if errors else 0


def _cmd_plot(args) -> int:
    table = ResultTable()
    for path in args.csv:
        text = Path(path).read_text(encoding="utf-8")
        if text.startswith("scenario_id,g,"):
            table.bounds.extend(parse_bound_csv(text))
        else:
            table.rows.extend(parse_curve_csv(text))
    svg = render_plot(table, title=args.title)
    Path(args.output).write_text(svg, encoding="utf-8")
    print(f"wrote {args.output}")
    return 0


def _cmd_bound(args) -> int:
    bound = observation_bound(args.K, args.pf, args.pd)
    print("g,q_f,q_m")
    for g, qf, qm in zip(bound.g, bound.q_f, bound.q_m):
        print(f"{g},{qf!r},{qm!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfusion",
        description="CROC evaluation of decision-fusion reporting protocols "
                    "(MAC/PAC/CMAC/CPAC) by Monte Carlo simulation and "
                    "MGF-based analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run an experiment grid from a config "
                                     "file and write CSV tables")
    p.add_argument("config", help="key=value configuration file")
    p.add_argument("-o", "--output-dir", default=None,
                   help="override output directory (also via "
                        "DFUSION_OUTPUT_DIR)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render CROC curve/bound CSVs to SVG")
    p.add_argument("csv", nargs="+", help="curve or bound CSV files")
    p.add_argument("-o", "--output", required=True, help="output SVG path")
    p.add_argument("--title", default="CROC")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("bound", help="print the observation bound table")
    p.add_argument("--K", type=int, required=True, help="number of users")
    p.add_argument("--pf", type=float, default=0.05,
                   help="local false-alarm probability")
    p.add_argument("--pd", type=float, default=0.5,
                   help="local detection probability")
    p.set_defaults(func=_cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
