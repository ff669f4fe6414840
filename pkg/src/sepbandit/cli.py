"""Command line entry point: ``sepbandit run | discover-bench | plot``.

Exit status is 0 on success, 2 for configuration errors and 3 for I/O
errors.
"""

from __future__ import annotations

import argparse
import sys

from .harness import ENVS, ExperimentConfig, discovery_bench, parse_config, run_experiment
from .plotting import emit_plot, read_agg_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", choices=ENVS)
    p.add_argument("--env-file", help="SCM text file for --env file")
    p.add_argument("--horizon", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--policies", help="comma list, e.g. ucb,is_ucb:oracle_sepsets")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--workers", type=int)
    p.add_argument("--initial-pulls", type=int)
    p.add_argument("--max-sepset-size", type=int)
    p.add_argument("--p-two", type=float)
    p.add_argument("--log-rounds", action="store_true", default=None)
    p.add_argument("--dump-data", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepbandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _experiment_args(sub.add_parser("run", help="run a regret experiment"))
    _experiment_args(sub.add_parser("discover-bench", help="score discovery under uniform sampling"))
    p = sub.add_parser("plot", help="render agg.csv as SVG")
    p.add_argument("agg", help="agg.csv produced by run")
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--title", default="Cumulative regret")
    return parser


def config_from_args(args) -> ExperimentConfig:
    kwargs = {}
    if args.config:
        with open(args.config) as fh:
            kwargs = parse_config(fh.read())
    flags = {
        "env": args.env, "env_file": args.env_file, "horizon": args.horizon,
        "runs": args.runs, "seed": args.seed, "out": args.out, "workers": args.workers,
        "initial_pulls": args.initial_pulls, "max_sepset_size": args.max_sepset_size,
        "p_two": args.p_two, "log_rounds": args.log_rounds, "dump_data": args.dump_data,
    }
    if args.policies:
        flags["policies"] = [p for p in args.policies.split(",") if p.strip()]
    kwargs.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig(**kwargs)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "plot":
            emit_plot(read_agg_csv(args.agg), args.out, title=args.title)
            return EXIT_OK
        cfg = config_from_args(args)
        if args.command == "run":
            res = run_experiment(cfg)
            if cfg.out is None:
                for name, (mean, se) in res.trace.aggregate().items():
                    tail = "" if se is None else f" +/- {se[-1]:.3f}"
                    print(f"{name}: cumulative regret {mean[-1]:.3f}{tail}")
        else:
            rows = discovery_bench(cfg)
            if cfg.out is None:
                for _, run, n, m in rows:
                    print(f"run {run} n={n}: sensitivity {m.sensitivity:.3f} fpr {m.false_positive_rate:.3f}")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # ConfigError, StructuralError and malformed input files
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
