"""Command-line entry point: ``confnull --config run.yaml --command solve --out results``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, ConfnullError, DomainError, OrderingError, ResolutionError, ShapeError
from .scenario import COMMANDS, EXIT_IO, EXIT_NUMERICAL, EXIT_VALIDATION, load_config, run

log = logging.getLogger("confnull")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="confnull", description="Null-control scenarios for conformable heat systems.")
    p.add_argument("--config", required=True, type=Path, help="YAML scenario file")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="override the config's random seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print("error: invalid config", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be >= 0", file=sys.stderr)
            return EXIT_VALIDATION
        cfg = cfg.with_seed(args.seed)
    try:
        result = run(cfg, args.command, args.out)
        (args.out / "timing.json").write_text(json.dumps({"wallTime": result.wall_time}) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, OrderingError, ResolutionError, ShapeError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfnullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    rep = result.report
    print(f"{args.command}: {rep['status']} (exit {result.exit_code})")
    for name, ok in rep["verdicts"].items():
        print(f"  {name}: {'ok' if ok else 'FAILED'}")
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
