"""Command-line entry point.

    depsens run <config> [--seed N] [--threads N] [--out DIR]
    depsens validate <config>
    depsens list-benchmarks
    depsens list-indices

Exit codes: 0 success, 2 invalid config, 3 estimation or runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .benchmarks import list_benchmarks
from .errors import ConfigError, DepsensError
from .experiment import INDEX_DESCRIPTIONS, SCREENING_DEFAULTS, run_experiment, validate_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="depsens", description="Dependence-measure sensitivity analysis experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config and write the report files")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--threads", type=int, help="worker threads across replicates")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    val = sub.add_parser("validate", help="validate a config and print it with defaults filled in")
    val.add_argument("config")
    sub.add_parser("list-benchmarks", help="list the benchmark functions")
    sub.add_parser("list-indices", help="list index and screening names")
    return ap


def _config_errors(err: ConfigError) -> int:
    print("config error:", file=sys.stderr)
    for problem in err.problems:
        print(f"  {problem}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-benchmarks":
        for name, text in list_benchmarks().items():
            print(f"{name:<18} {text}")
        return EXIT_OK
    if args.command == "list-indices":
        for name, text in INDEX_DESCRIPTIONS.items():
            print(f"{name:<16} {text}")
        print("screening: " + ", ".join(SCREENING_DEFAULTS))
        return EXIT_OK
    try:
        cfg = validate_config(args.config)
        if args.command == "validate":
            sys.stdout.write(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
            return EXIT_OK
        changes = {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError([f"--seed: expected a non-negative integer, got {args.seed}"])
            changes["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError([f"--threads: expected a positive integer, got {args.threads}"])
            changes["threads"] = args.threads
        if args.out is not None:
            changes["output_dir"] = args.out
        cfg = cfg.replace(**changes)
    except ConfigError as e:
        return _config_errors(e)
    try:
        doc = run_experiment(cfg)
    except (DepsensError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {cfg.output_dir}/results.json ({len(doc['indices'])} indices, {cfg.replicates} replicates)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
