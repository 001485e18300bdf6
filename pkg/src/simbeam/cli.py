"""Command-line harness.

Verbs: ``convergence``, ``layers``, ``timing``, ``oracle-check``.  Each takes
``--config`` (JSON, see simbeam.config), optional ``--seeds``, and ``--out``.
The SIMBEAM_SEED environment variable overrides all seed sources with a
single seed.  Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, default_config, load_config, save_config
from .exceptions import NumericError
from .experiments import (emit_csv, run_convergence_study, run_layer_sweep,
                          run_oracle_check, run_timing_study, study_output_path)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(sub, threads=False):
    sub.add_argument("--config", required=True, help="path to the JSON config file")
    sub.add_argument("--seeds", type=int, nargs="+", default=None,
                     help="override run.seeds from the config")
    sub.add_argument("--out", default=None, help="output CSV path")
    if threads:
        sub.add_argument("--threads", type=int, default=1,
                         help="worker processes (1 keeps runs byte-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simbeam",
        description="Stacked-metasurface downlink beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="rate vs iteration per bit depth")
    _add_common(conv, threads=True)

    layers = sub.add_parser("layers", help="final rate vs layer count per bit depth")
    _add_common(layers, threads=True)
    layers.add_argument("--L", type=int, nargs="+", default=[1, 2, 3, 4, 5],
                        help="ascending layer counts to sweep")

    # timing wants one quiet process; oracle-check finishes in seconds
    timing = sub.add_parser("timing", help="optimizer wall-clock vs layer count")
    _add_common(timing)
    timing.add_argument("--L", type=int, nargs="+", default=[2, 4, 6])
    timing.add_argument("--reps", type=int, default=30)

    oracle = sub.add_parser("oracle-check", help="toy-scale comparison against brute force")
    _add_common(oracle)

    init = sub.add_parser("init-config", help="write the default config file")
    init.add_argument("--out", required=True)
    return parser


def _apply_seed_overrides(cfg, args) -> None:
    env = os.environ.get("SIMBEAM_SEED")
    if env is not None:
        cfg.run.seeds = [int(env)]
    elif args.seeds is not None:
        cfg.run.seeds = list(args.seeds)
    if not cfg.run.seeds:
        raise ConfigError("run.seeds resolved to an empty list")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init-config":
            save_config(default_config(), args.out)
            print(f"wrote {args.out}")
            return EXIT_OK

        cfg = load_config(args.config)
        _apply_seed_overrides(cfg, args)

        if args.command == "convergence":
            fieldnames, rows = run_convergence_study(cfg, threads=args.threads)
            out = args.out or study_output_path(cfg, "convergence")
        elif args.command == "layers":
            fieldnames, rows = run_layer_sweep(cfg, args.L, threads=args.threads)
            out = args.out or study_output_path(cfg, "layers")
        elif args.command == "timing":
            fieldnames, rows = run_timing_study(cfg, args.L, reps=args.reps)
            out = args.out or study_output_path(cfg, "timing")
        elif args.command == "oracle-check":
            fieldnames, rows = run_oracle_check(cfg)
            out = args.out or study_output_path(cfg, "oracle")
        else:  # pragma: no cover - argparse enforces the choices
            raise AssertionError(args.command)

        emit_csv(rows, fieldnames, out)
        print(f"wrote {len(rows)} rows to {out}")
        return EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
