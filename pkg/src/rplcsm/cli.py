"""Command-line front end: ``python -m rplcsm [options]``.

Without ``--out`` the CSV report goes to stdout.  Exit status is 0 on
success, 2 for bad arguments or configuration, 3 if a simulation aborts.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .config import DEFAULT_PRESET, SCENARIOS, ConfigError, emit_config, parse_config
from .experiment import emit_report, run_experiment, run_matrix
from .netsim import SimulationAbort
from .secmode import SecureMode

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rplcsm", description="Seeded RPL secure-mode simulator")
    ap.add_argument("--config", metavar="PATH", help="INI scenario file")
    ap.add_argument("--preset", choices=["paper"], default="paper",
                    help="defaults the config file is layered on")
    ap.add_argument("--scenario", choices=sorted(SCENARIOS), help="attack scenario")
    ap.add_argument("--mode", choices=[m.value for m in SecureMode])
    ap.add_argument("--rounds", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", metavar="DIR", help="write CSV files here instead of stdout")
    ap.add_argument("--matrix", action="store_true",
                    help="run no-attack and neighbor scenarios in all four modes")
    ap.add_argument("--echo-config", action="store_true",
                    help="print the resolved configuration and exit")
    return ap


def load_config(args: argparse.Namespace):
    base = DEFAULT_PRESET
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    cfg = parse_config(text, base)
    changes = {}
    if args.scenario is not None:
        changes["attack"] = SCENARIOS[args.scenario]
    if args.mode is not None:
        changes["mode"] = SecureMode(args.mode)
    if args.rounds is not None:
        changes["rounds"] = args.rounds
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.with_(**changes) if changes else cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"rplcsm: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.echo_config:
        sys.stdout.write(emit_config(cfg))
        return EXIT_OK

    try:
        if args.matrix:
            results = run_matrix(cfg, args.out)
            if args.out is None:
                sys.stdout.write(emit_report(results, per_round=False))
            return EXIT_OK
        result = run_experiment(cfg)
    except SimulationAbort as exc:
        print(f"rplcsm: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT

    text = emit_report([result])
    if args.out is None:
        sys.stdout.write(text)
    else:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{cfg.scenario}_{cfg.mode.value}.csv"), "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK
