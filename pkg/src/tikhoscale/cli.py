"""Command-line entry point.

Every subcommand reads an optional TOML experiment file and applies the
command-line overrides on top of it before writing its CSV table(s) to the
output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .errors import InputError, NumericError, UnsupportedOperationError
from .experiment import (
    ExperimentConfig,
    ExperimentError,
    apply_overrides,
    load_config,
    run_experiment,
)

SUBCOMMANDS = {
    "delta": ("delta",),
    "spectrum": ("spectrum",),
    "functionals": ("functionals",),
    "picard": ("picard",),
    "solve": ("errors", "solution"),
    "sweep": ("delta", "spectrum", "functionals", "picard", "errors", "maxg"),
}


def _list(kind):
    def parse(text):
        try:
            return tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tikhoscale", description="Multiscale Tikhonov experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"write the {name} table(s)")
        p.add_argument("--config", type=Path, help="TOML experiment file")
        p.add_argument("--d", type=float, help="kernel depth")
        p.add_argument("--N", type=int, help="fine grid size")
        p.add_argument("--n", type=_list(int), help="coarse sizes, comma separated")
        p.add_argument("--method", type=_list(str), help="MDP, ADP, UPRE, GCV; comma separated")
        p.add_argument("--epsilon", type=_list(float), help="rank precisions, comma separated")
        p.add_argument("--nu", type=float, help="relative noise level")
        p.add_argument("--seed", type=_list(int), help="noise seeds, comma separated")
        p.add_argument("--assembly", choices=("midpoint", "exact"))
        p.add_argument("--out", type=Path, help="output directory")
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
    return apply_overrides(
        cfg,
        d=args.d,
        N=args.N,
        resolutions=args.n,
        methods=args.method,
        epsilon_list=args.epsilon,
        nu=args.nu,
        seeds=args.seed,
        assembly=args.assembly,
        output_dir=args.out,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        written = run_experiment(cfg, SUBCOMMANDS[args.command])
    except (InputError, NumericError, UnsupportedOperationError, ExperimentError) as exc:
        print(f"tikhoscale {args.command}: error: {exc}", file=sys.stderr)
        return 2
    for path in written.values():
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
