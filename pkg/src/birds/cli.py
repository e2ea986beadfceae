"""Command-line entry point: ``birds run`` and ``birds sweep``.

Exit status is 0 on success, 2 for configuration problems (bad scenario
file, bad flag values) and 3 for failures during the simulation itself.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from birds.consensus import ConsensusKind
from birds.errors import BirdsError, ConfigError, InvalidParameter
from birds.simkit import Scenario, emit_csv, load_scenario, run_scenario
from birds.simkit import sweeps

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

SWEEPS = ("uavs", "jobs", "users", "energy")


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by itself; route it through our handler
    def error(self, message):
        raise _ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="birds", description="UAV delivery blockchain simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--scenario", type=Path, help="scenario file (defaults if omitted)")
    run.add_argument("--consensus", choices=[k.value for k in ConsensusKind])
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--dump-chain", action="store_true", help="also write chain.json")

    sweep = sub.add_parser("sweep", help="run one of the experiment sweeps")
    sweep.add_argument("kind", choices=SWEEPS)
    sweep.add_argument("--scenario", type=Path)
    sweep.add_argument("--seeds", type=int, help="seeds per cell")
    sweep.add_argument("--out", type=Path, required=True)
    sweep.add_argument("--workers", type=int, default=1)
    return parser


def _scenario(path: Path | None) -> Scenario:
    if path is None:
        return Scenario()
    try:
        return load_scenario(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    sc = _scenario(args.scenario)
    try:
        if args.consensus:
            sc = sc.with_consensus(args.consensus)
        if args.seed is not None:
            sc = replace(sc, seed=args.seed)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None
    args.out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(sc)
    emit_csv(result.rows, args.out / "metrics.csv")
    _write_json(args.out / "summary.json", result.summary())
    if args.dump_chain:
        (args.out / "chain.json").write_text(result.chain.dumps() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _scenario(args.scenario)
    if args.seeds is not None and args.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.kind == "uavs":
        rows = sweeps.sweep_uav_count(sc, seeds=args.seeds, workers=args.workers)
    elif args.kind == "jobs":
        rows = sweeps.sweep_jobs(sc, seeds=args.seeds, workers=args.workers)
    elif args.kind == "users":
        rows = sweeps.sweep_users_consensus(sc, seeds=args.seeds, workers=args.workers)
    else:
        rows = sweeps.energy_timeline(sc)
    emit_csv(rows, args.out / f"sweep_{args.kind}.csv")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ArgumentError as exc:
        print(f"birds: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return cmd_run(args) if args.command == "run" else cmd_sweep(args)
    except ConfigError as exc:
        print(f"birds: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BirdsError, RuntimeError, ValueError, OSError) as exc:
        print(f"birds: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
