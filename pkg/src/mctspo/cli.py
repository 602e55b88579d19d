"""Command-line interface: train, replay, compare."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .envs import ENV_KINDS, EnvSpec
from .harness import (ALGORITHMS, ExperimentConfig, compare, load_config,
                      replay, run_experiment)

log = logging.getLogger("mctspo")


def _setup_logging() -> None:
    level = os.environ.get("MCTSPO_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mctspo",
        description="Gradient-free policy optimization on sparse-reward "
                    "control tasks (tree search and GA baselines). "
                    "Set MCTSPO_LOG=info|debug for progress output.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run multi-seed trials and write curves")
    train.add_argument("--config", help="experiment config JSON "
                                        "(default: desk preset, net 32/32, 5e5 calls)")
    train.add_argument("--algo", choices=ALGORITHMS)
    train.add_argument("--env", choices=ENV_KINDS)
    train.add_argument("--seed", type=int, action="append",
                       help="trial seed; repeat for several trials")
    train.add_argument("--budget", type=int, help="env-call budget per trial")
    train.add_argument("--out", help="output directory")
    train.add_argument("--workers", type=int, help="concurrent trials")

    rep = sub.add_parser("replay", help="roll out a saved genome")
    rep.add_argument("--genome", required=True)
    rep.add_argument("--env", choices=ENV_KINDS, required=True)
    rep.add_argument("--horizon", type=int, default=100)
    rep.add_argument("--power", type=float, default=0.0015)
    rep.add_argument("--goal-height", type=float, default=1.999)
    rep.add_argument("--control-penalty", type=float, default=0.001)

    cmp_ = sub.add_parser("compare", help="side-by-side table for two configs")
    cmp_.add_argument("--config-a", required=True)
    cmp_.add_argument("--config-b", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--workers", type=int)
    return parser


def _train(args) -> int:
    if args.config:
        config = load_config(args.config)
    else:
        config = ExperimentConfig.desk()
    if args.env:
        config = replace(config, env=EnvSpec(kind=args.env))
    if args.algo:
        config = replace(config, algorithm=args.algo)
    if args.seed:
        config = replace(config, seeds=tuple(args.seed))
    if args.budget:
        config = replace(config, budget=args.budget)
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.workers:
        config = replace(config, workers=args.workers)
    if config.out_dir is None:
        raise ValueError("no output directory: pass --out or set out_dir in the config")
    trials = run_experiment(config)
    failed = [t for t in trials if t.failed]
    for t in trials:
        status = f"FAILED ({t.error})" if t.failed else f"best_return={t.best_return!r}"
        print(f"seed {t.seed}: {status}")
    print(f"outputs in {config.out_dir}")
    return 1 if failed else 0


def _replay(args) -> int:
    spec = EnvSpec(kind=args.env, horizon=args.horizon, power=args.power,
                   goal_height=args.goal_height,
                   control_penalty=args.control_penalty)
    ret, reached = replay(args.genome, spec)
    print(json.dumps({"return": ret, "reached_goal": reached}))
    return 0


def _compare(args) -> int:
    config_a = load_config(args.config_a)
    config_b = load_config(args.config_b)
    if args.workers:
        config_a = replace(config_a, workers=args.workers)
        config_b = replace(config_b, workers=args.workers)
    rows = compare(config_a, config_b, args.out)
    from .harness import format_compare_table
    print(format_compare_table(rows), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return _train(args)
        if args.command == "replay":
            return _replay(args)
        return _compare(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
