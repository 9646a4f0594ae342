"""Command line: ``spiral run <config>`` and ``spiral plot <csv...> --out <svg>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import ConfigError, load_config, run_experiment
from .plotting import emit_svg
from .trace import read_csv

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="spiral", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None)
    p = sub.add_parser("plot", help="plot trace CSVs as SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--x", choices=("epochs", "seconds"), default="epochs")
    return ap


def _run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    res = run_experiment(cfg, output_dir=args.output_dir)
    for label, path in res.outputs.items():
        print(f"{label}: {path}")
    for label, msg in res.errors.items():
        print(f"{label}: FAILED {msg}", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_PARTIAL


def _plot(args):
    traces = []
    for name in args.csv:
        try:
            with open(name, encoding="utf-8") as fh:
                traces.append(read_csv(fh, solver=Path(name).stem))
        except (OSError, ValueError) as exc:
            print(f"cannot read {name}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    Path(args.out).write_text(emit_svg(traces, x=args.x), encoding="utf-8")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.cmd == "run":
        return _run(args)
    return _plot(args)


if __name__ == "__main__":
    sys.exit(main())
