#!/usr/bin/env python3
"""
ADMM penalty benchmark command line.

Subcommands:
    sweep   one problem, every policy x tau0 x order cell (plot-ready CSV)
    table   comparison policies at a shared tau0 on one or more problems
    solve   a single solve, optionally exporting the recovered output

Settings come from the config module defaults, then an optional JSON file
(--config), then command-line flags.

Exit codes: 0 success, 1 other failure, 2 invalid configuration,
3 dataset or output IO failure.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np

from src.lib import config
from src.lib.errors import AdmmBenchError, DatasetIOError, ValidationError
from src.scripts.bench import run_sweep, run_table, solve_one


def parse_tau_grid(text: str):
    """
    "0.1,1,10" lists values; "lo:hi:n" gives n log-spaced points in [lo, hi].
    """
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return tuple(float(t) for t in np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(n)))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ValidationError(f"cannot parse tau grid {text!r}: {exc}") from exc


def _split(text: Optional[str]):
    if text is None:
        return None
    return tuple(part.strip() for part in text.split(",") if part.strip())


def load_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise DatasetIOError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return data


def merge_settings(file_values: dict, flag_values: dict) -> dict:
    """Flags that were given override the file; unset flags are None."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="admm-bench",
        description="Penalty-parameter benchmark for nonconvex ADMM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dataset", help="dataset file (CSV matrix/signal or grayscale image)")
        p.add_argument("--order", choices=["smooth_first", "nonsmooth_first", "both"])
        p.add_argument("--tol", type=float, dest="eps_tol", help="relative stopping tolerance")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--seed", type=int)
        p.add_argument("--rho", type=float, help="l0 weight (regression/denoising)")
        p.add_argument("--sigma", type=float, help="image noise standard deviation")
        p.add_argument("--out", help=f"output directory (default {config.OUTPUT_DIR})")
        p.add_argument("--jobs", type=int, help="worker threads")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--verbose", "-v", action="store_true")

    sweep = sub.add_parser("sweep", help="policy x tau0 x order sweep for one problem")
    sweep.add_argument("--problem", choices=config.PROBLEM_KINDS)
    sweep.add_argument("--policy", dest="policies", help="comma-separated policy kinds")
    sweep.add_argument("--tau-grid", dest="tau_grid", help='"a,b,c" or "lo:hi:n"')
    sweep.add_argument("--trace", action="store_true", help="store per-iteration traces in the JSON report")
    common(sweep)

    table = sub.add_parser("table", help="policy comparison at a shared tau0")
    table.add_argument("--problem", dest="problems", help="comma-separated problem kinds")
    table.add_argument("--policy", dest="policies", help="comma-separated policy kinds")
    table.add_argument("--tau0", type=float)
    common(table)

    one = sub.add_parser("solve", help="single solve with optional output export")
    one.add_argument("--problem", choices=config.PROBLEM_KINDS)
    one.add_argument("--policy", choices=config.POLICY_KINDS)
    one.add_argument("--tau0", type=float)
    one.add_argument("--no-trace", action="store_true", help="omit the per-iteration trace from the report")
    common(one)
    return parser


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def sweep_settings(args) -> dict:
    flags = {
        "problem": args.problem,
        "dataset": args.dataset,
        "seed": args.seed,
        "tau_grid": parse_tau_grid(args.tau_grid) if args.tau_grid else None,
        "policies": _split(args.policies),
        "order": args.order,
        "eps_tol": args.eps_tol,
        "max_iter": args.max_iter,
        "out": args.out,
        "jobs": args.jobs,
        "rho": args.rho,
        "sigma": args.sigma,
        "record_trace": True if args.trace else None,
    }
    return merge_settings(load_config_file(args.config), flags)


def table_settings(args) -> dict:
    flags = {
        "problems": _split(args.problems),
        "dataset": args.dataset,
        "seed": args.seed,
        "tau0": args.tau0,
        "policies": _split(args.policies),
        "order": args.order,
        "eps_tol": args.eps_tol,
        "max_iter": args.max_iter,
        "out": args.out,
        "jobs": args.jobs,
        "rho": args.rho,
        "sigma": args.sigma,
    }
    settings = merge_settings(load_config_file(args.config), flags)
    settings.setdefault("problems", ("regression",))
    return settings


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        if args.command == "sweep":
            settings = sweep_settings(args)
            if "problem" not in settings:
                raise ValidationError("sweep needs --problem (or a 'problem' key in --config)")
            return run_sweep.execute(settings)
        if args.command == "table":
            return run_table.execute(table_settings(args))
        return solve_one.execute(args, load_config_file(args.config))
    except ValidationError as exc:
        print(f"❌ Invalid configuration: {exc}")
        return ValidationError.exit_code
    except DatasetIOError as exc:
        print(f"❌ IO error: {exc}")
        return DatasetIOError.exit_code
    except AdmmBenchError as exc:
        print(f"❌ {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
