"""Command-line front end for batch experiment runs.

Every experiment subcommand takes a YAML config file plus optional
overrides for seed, output directory, and worker count.  Exit codes:
0 on success, 1 on configuration or argument errors, 2 on numerical
failure (including failed selftest checks).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import __version__, harness
from .config import load_config
from .errors import (InvalidArgumentError, InvalidConfigError,
                     NumericalFailureError)

_WORKERS_ENV = "MOBILEMC_WORKERS"

_EXPERIMENTS = (
    ("cir", "single-release response curves per mobility case"),
    ("received-signal", "analytical vs simulated frame signal"),
    ("distance-pdf", "separation law vs reflected-walk histogram"),
    ("ber", "error probability sweep over detection thresholds"),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobilemc",
        description="Batch experiments for diffusive links with mobile nodes.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _EXPERIMENTS:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="YAML experiment file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override run.seed from the config")
        cmd.add_argument("--output", default=None,
                         help="override run.output_dir from the config")
        cmd.add_argument("--workers", type=int, default=None,
                         help=f"worker processes (overrides {_WORKERS_ENV} "
                              "and run.workers)")
    selftest = sub.add_parser(
        "selftest", help="run built-in consistency checks, no config needed"
    )
    selftest.add_argument("--seed", type=int, default=0,
                          help="seed for the stochastic checks")
    return parser


def _resolve_workers(flag_value: int | None, config_value: int) -> int:
    if flag_value is not None:
        workers = flag_value
    else:
        env = os.environ.get(_WORKERS_ENV)
        if env is not None:
            try:
                workers = int(env)
            except ValueError:
                raise InvalidConfigError(
                    f"{_WORKERS_ENV} must be an integer, got {env!r}"
                ) from None
        else:
            workers = config_value
    if workers < 1:
        raise InvalidConfigError(f"worker count must be >= 1, got {workers}")
    return workers


def _run_selftest(seed: int) -> int:
    results = harness.run_selftest(seed=seed)
    failures = 0
    for name, ok, detail in results:
        marker = "ok  " if ok else "FAIL"
        print(f"{marker} {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} of {len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits by itself for --help/--version (code 0) and for
        # usage errors (code 2); fold the latter into the argument-error
        # code so 2 stays reserved for numerical failures
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "selftest":
            return _run_selftest(args.seed)
        cfg, blob = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise InvalidConfigError("--seed must be >= 0")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.output is not None:
            cfg = dataclasses.replace(cfg, output_dir=args.output)
        workers = _resolve_workers(args.workers, cfg.workers)
        paths = harness.run_command(args.command, cfg, blob, workers)
        for path in paths:
            print(f"wrote {path}")
        return 0
    except (InvalidConfigError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
