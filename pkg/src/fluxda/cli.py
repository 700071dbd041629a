"""Command-line entry point: ``fluxda {simulate,osse,compare}``.

Exit status is 0 on success, 2 on a usage or configuration error and 1 on a
runtime failure.
"""

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .runner import run_compare, run_osse, run_simulate


def build_parser():
    parser = argparse.ArgumentParser(prog="fluxda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "free-running flux transport ensemble"),
                        ("osse", "twin experiment with one assimilation method"),
                        ("compare", "twin experiment with the control, enls, etkf and letkf")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--method", choices=["none", "enls", "etkf", "letkf"])
        p.add_argument("--rho", type=float, help="inflation factor")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--steps", type=int, help="number of transport steps (overrides duration)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve(args):
    cfg = parse_config(args.config)
    changes = {}
    if args.method is not None:
        changes["method"] = args.method
    if args.rho is not None:
        changes["rho"] = args.rho
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("must be >= 0", "steps")
        changes["duration"] = args.steps * cfg.dt
    return cfg.replace(**changes) if changes else cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
    except (ConfigError, OSError) as exc:
        print(f"fluxda: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "simulate":
            run_simulate(cfg)
        elif args.command == "osse":
            run_osse(cfg)
        else:
            run_compare(cfg)
    except Exception as exc:  # noqa: BLE001
        print(f"fluxda: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
