"""Command line interface.

    airjam divergence --mean0 .. --cov0 .. --mean1 .. --cov1 .. [--alpha A ...]
    airjam run {net,decode-sim,resolvability-sim,rate-window,e2e-sim,exponent}
               --config PATH --out DIR [--seed U64] [--workers N]

Exit codes: 0 success, 2 configuration/usage error, 3 runtime numerical
error.  All information quantities are printed in nats.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import config_hash, parse_config
from .errors import AirjamError, ConfigError
from .experiments import RUNNERS
from .gaussian import GaussianDist
from .info import kl_gaussian, renyi_gaussian


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.split(",") if tok.strip()])


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([[float(tok) for tok in r.split(",") if tok.strip()] for r in rows])


def _fmt(value: float) -> str:
    if value == math.inf:
        return "inf"
    return f"{value:.12g}"


def cmd_divergence(args) -> int:
    try:
        g0 = GaussianDist(_parse_vector(args.mean0), _parse_matrix(args.cov0))
        g1 = GaussianDist(_parse_vector(args.mean1), _parse_matrix(args.cov1))
    except (ValueError, AirjamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        print("measure,value_nats")
        print(f"kl,{_fmt(kl_gaussian(g0, g1))}")
        for alpha in args.alpha or []:
            print(f"renyi_{alpha:g},{_fmt(renyi_gaussian(alpha, g0, g1))}")
    except AirjamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config, seed_override=args.seed,
                           workers_override=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = RUNNERS[args.subcommand]
    try:
        summary = runner(cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AirjamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"[config_hash={config_hash(cfg)}] {summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airjam",
        description="Friendly-jamming simulations: compound decoding for the "
                    "legitimate receiver, resolvability for the eavesdropper.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    div = sub.add_parser("divergence",
                         help="closed-form KL/Renyi divergences between Gaussians")
    div.add_argument("--mean0", required=True, help="comma-separated mean of g0")
    div.add_argument("--cov0", required=True,
                     help="covariance of g0: rows separated by ';', entries by ','")
    div.add_argument("--mean1", required=True)
    div.add_argument("--cov1", required=True)
    div.add_argument("--alpha", type=float, action="append",
                     help="Renyi order (repeatable); alpha > 0, alpha != 1")
    div.set_defaults(fn=cmd_divergence)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("subcommand", choices=sorted(RUNNERS))
    run.add_argument("--config", required=True, help="INI config path")
    run.add_argument("--out", required=True, help="output directory for CSV files")
    run.add_argument("--seed", type=int, default=None,
                     help="override [experiment] master_seed")
    run.add_argument("--workers", type=int, default=None,
                     help="override [experiment] workers")
    run.set_defaults(fn=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
