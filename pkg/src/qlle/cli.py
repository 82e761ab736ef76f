"""Command-line entry point: ``qlle --pipeline qlle --n 32 --out run``.

Flags override values from ``--config``; both override the built-in defaults.
"""

import argparse
import json
import sys
from dataclasses import replace

from .errors import ContractError, ParseError, StageError
from .pipeline import PIPELINES, RunConfig, load_config, run


def build_parser():
    p = argparse.ArgumentParser(prog="qlle", description="Classical, linear-algebra quantum and variational LLE.")
    p.add_argument("--dataset", help="s-curve, swiss-roll or a path to a CSV of points (one per row)")
    p.add_argument("--n", type=int, help="number of generated points")
    p.add_argument("--seed", type=int, help="generator and sampling seed")
    p.add_argument("--k", type=int, help="neighbors per point")
    p.add_argument("--d", type=int, help="embedding dimension")
    p.add_argument("--pipeline", choices=PIPELINES)
    p.add_argument("--config", help="TOML file with a [pipeline] table and per-module tables")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-oracle", action="store_true", help="skip the classical comparison")
    p.add_argument("--dump-circuit", action="store_true", help="write circuit.txt")
    p.add_argument("--trace", action="store_true", help="write optimizer trace.csv and keep clock histograms")
    p.add_argument("--shots", type=int, help="overlap-test shots (0 = exact)")
    return p


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {name: getattr(args, name) for name in ("dataset", "n", "seed", "k", "d", "pipeline", "out", "shots")}
    cfg = replace(cfg, **{k: v for k, v in over.items() if v is not None})
    if args.no_oracle:
        cfg = replace(cfg, oracle=False)
    if args.dump_circuit:
        cfg = replace(cfg, dump_circuit=True)
    if args.trace:
        cfg = replace(cfg, trace=True)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args).validate()
    except (ContractError, ParseError, OSError) as exc:
        print(f"qlle: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg)
    except ContractError as exc:
        print(f"qlle: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"qlle: {exc} (partial outputs in {cfg.out})", file=sys.stderr)
        return 1
    summary = {k: v for k, v in report.metrics.items() if v is not None}
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
