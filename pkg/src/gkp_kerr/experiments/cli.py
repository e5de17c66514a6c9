"""Command-line entry point: ``gkp-kerr <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..fock_core import NumericError
from ..sbs import PostselectionStarved
from .config import ConfigError, SweepConfig
from .runs import (
    realistic_config,
    run_fig1,
    run_fig2a,
    run_fig2b,
    run_realistic,
    run_sbs_steady,
    write_sbs_records,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_STARVED = 4

log = logging.getLogger("gkp_kerr")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with SweepConfig fields")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--delta", type=float, action="append", help="envelope size (repeatable)")
    common.add_argument("--gamma", type=float, action="append", help="loss parameter (repeatable)")
    common.add_argument("--rounds", type=int, action="append", help="stabilization rounds (repeatable)")
    common.add_argument("--dim", type=int, help="Fock truncation for every delta")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="gkp-kerr", description="Kerr-gate GKP magic-state simulations")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("fig1", "Wigner functions before and after the Kerr and cubic gates"),
        ("fig2a", "perfect-error-detection fidelity versus loss"),
        ("fig2b", "post-selected stabilization rounds versus loss"),
        ("realistic", "combined-error scenario"),
        ("sbs-steady", "rounds until the post-selected state is steady"),
        ("validate", "quick invariant checks"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    return p


def _config(args) -> SweepConfig:
    if args.config:
        cfg = SweepConfig.load(args.config)
    elif args.command == "realistic":
        cfg = realistic_config()
    else:
        cfg = SweepConfig()
    changes = {}
    if args.delta:
        changes["deltas"] = args.delta
        changes["include_small_delta"] = cfg.include_small_delta or min(args.delta) < 0.2
        if args.command == "fig1":
            changes["fig1_delta"] = args.delta[0]
    if args.gamma:
        changes["gammas"] = args.gamma
    if args.rounds:
        changes["n_rounds"] = args.rounds
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["out_dir"] = str(args.out)
    if args.workers:
        changes["workers"] = args.workers
    if args.dim:
        deltas = changes.get("deltas", cfg.deltas)
        changes["dims"] = {repr(float(d)): args.dim for d in deltas + [cfg.fig1_delta]}
    return cfg.replace(**changes) if changes else cfg


def _exit_for(record) -> int:
    flags = {e["flag"] for e in record.errors}
    if "starved" in flags:
        return EXIT_STARVED
    if flags:
        return EXIT_NUMERIC
    return EXIT_OK


def _emit(record, out_dir: Path, plot: bool = True) -> None:
    paths = record.write(out_dir)
    if plot and record.rows:
        from .plotting import infidelity_svg

        infidelity_svg(out_dir / f"{record.name}.svg", record.rows, record.name)
    print(record.csv_text(), end="")
    log.info("wrote %s", paths)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    try:
        if args.command == "fig1":
            res = run_fig1(cfg, out)
            print(json.dumps(res["metrics"], indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "validate":
            from .validate import run_checks

            ok = run_checks()
            return EXIT_OK if ok else EXIT_NUMERIC
        runner = {"fig2a": run_fig2a, "fig2b": run_fig2b, "realistic": run_realistic, "sbs-steady": run_sbs_steady}
        record = runner[args.command](cfg)
        _emit(record, out, plot=args.command != "sbs-steady")
        if args.command == "sbs-steady":
            write_sbs_records(record, out)
        return _exit_for(record)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PostselectionStarved as exc:
        print(f"post-selection starved: {exc}", file=sys.stderr)
        return EXIT_STARVED
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
