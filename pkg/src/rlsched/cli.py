"""Command-line front end for the experiment harness.

Exit codes: 0 on success, 1 on a configuration error, 2 on a runtime error.
Every run is fully determined by the config file and flags; nothing reads
the wall clock.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .bench import (
    CompareResult,
    ExperimentConfig,
    SweepResult,
    compare_to_dict,
    comparison_csv,
    emit_reports,
    load_config,
    plotdata_csv,
    reference_config,
    run_compare,
    sweep_latency,
    sweep_load,
    sweep_resource,
    sweep_to_dict,
    write_text,
)
from .errors import ConfigError, RlschedError
from .simcore import run_mm1_validation


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlsched",
        description="Deterministic microservice-scheduling experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON experiment config (default: built-in reference)")
        p.add_argument("--seed", type=int, help="replace the config seed list with this one seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument(
            "--format",
            choices=("csv", "json"),
            default="csv",
            help="stdout summary format; files are always written in both",
        )
        return p

    p_run = experiment("run", "evaluate a single scheduler")
    p_run.add_argument("--scheduler", help="scheduler to run (required if the config lists several)")
    experiment("compare", "train and evaluate every configured scheduler")
    experiment("sweep-load", "compare across the four arrival-rate multipliers")
    experiment("sweep-latency", "compare across per-hop network latencies")
    experiment("sweep-resource", "compare across dominant-demand profiles")

    p_mm1 = sub.add_parser("validate-mm1", help="check the simulator against the M/M/1 closed form")
    p_mm1.add_argument("--lambda", dest="lam", type=float, default=0.5, help="arrival rate per ms")
    p_mm1.add_argument("--mu", type=float, default=1.0, help="service rate per ms")
    p_mm1.add_argument("--requests", type=int, default=100_000, help="number of arrivals")
    p_mm1.add_argument("--seed", type=int, default=9, help="simulation seed")
    p_mm1.add_argument("--out", help="also write the summary into this directory")
    p_mm1.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else reference_config()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg = dataclasses.replace(cfg, seeds=[args.seed])
    return cfg


def _note_written(paths: list[str]) -> None:
    for path in paths:
        print(f"wrote {path}", file=sys.stderr)


def _cmd_run(args) -> int:
    cfg = _load(args)
    if args.scheduler is not None:
        if args.scheduler not in cfg.schedulers:
            known = ", ".join(cfg.schedulers)
            raise ConfigError(f"--scheduler: {args.scheduler!r} not in config set ({known})")
        cfg = dataclasses.replace(cfg, schedulers=[args.scheduler])
    elif len(cfg.schedulers) != 1:
        raise ConfigError("run needs one scheduler; pass --scheduler or use compare")
    return _finish_compare(run_compare(cfg), args)


def _cmd_compare(args) -> int:
    return _finish_compare(run_compare(_load(args)), args)


def _finish_compare(result: CompareResult, args) -> int:
    _note_written(emit_reports(result, args.out))
    if args.format == "json":
        print(json.dumps(compare_to_dict(result), indent=2))
    else:
        print(comparison_csv(result), end="")
    return 0


def _cmd_sweep(args, sweep_fn) -> int:
    result: SweepResult = sweep_fn(_load(args))
    _note_written(emit_reports(result, args.out))
    if args.format == "json":
        print(json.dumps(sweep_to_dict(result), indent=2))
    else:
        print(plotdata_csv(result), end="")
    return 0


def _cmd_validate_mm1(args) -> int:
    if args.lam <= 0 or args.mu <= 0:
        raise ConfigError("--lambda and --mu must be positive")
    if args.lam >= args.mu:
        raise ConfigError("--lambda must be below --mu for a stable queue")
    if args.requests <= 0:
        raise ConfigError("--requests must be positive")
    observed = run_mm1_validation(args.lam, args.mu, args.requests, seed=args.seed)
    predicted = 1.0 / (args.mu - args.lam)
    rel_err = abs(observed - predicted) / predicted
    header = "lambda_per_ms,mu_per_ms,requests,seed,observed_mean_ms,predicted_mean_ms,relative_error"
    row = (
        f"{args.lam!r},{args.mu!r},{args.requests},{args.seed},"
        f"{observed!r},{predicted!r},{rel_err!r}"
    )
    csv_text = header + "\n" + row + "\n"
    doc = {
        "lambda_per_ms": args.lam,
        "mu_per_ms": args.mu,
        "requests": args.requests,
        "seed": args.seed,
        "observed_mean_ms": observed,
        "predicted_mean_ms": predicted,
        "relative_error": rel_err,
    }
    json_text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as e:
            raise RlschedError(f"cannot create {args.out}: {e}") from e
        for name, text in (("mm1_validation.csv", csv_text), ("mm1_validation.json", json_text)):
            path = os.path.join(args.out, name)
            write_text(path, text)
            print(f"wrote {path}", file=sys.stderr)
    print(json_text if args.format == "json" else csv_text, end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "sweep-load":
            return _cmd_sweep(args, sweep_load)
        if args.command == "sweep-latency":
            return _cmd_sweep(args, sweep_latency)
        if args.command == "sweep-resource":
            return _cmd_sweep(args, sweep_resource)
        if args.command == "validate-mm1":
            return _cmd_validate_mm1(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (RlschedError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
