"""Command-line entry point: ``singlegap <experiment> [flags]``.

Flags override values read from ``--config``. Each run writes report.csv,
report.json and the resolved config.txt to ``--out``. On failure a JSON
error record goes to stderr (and to error.json when the output directory is
known) and the exit status is non-zero: 2 for configuration errors, 1 for
anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, ExperimentConfig
from .experiments import run_experiment, write_outputs

_ENSEMBLE_CHOICES = ("gue", "matched", "both")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singlegap", description="Bulk eigenvalue gap experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=_int_list, help="comma-separated matrix sizes")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--s-grid", dest="s_grid", type=_float_list)
        p.add_argument("--ensemble", choices=_ENSEMBLE_CHOICES)
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--quad-order", dest="quad_order", type=int)
        p.add_argument("--i", type=int, help="eigenvalue index (default n // 2)")
        p.add_argument("--u", type=float, help="bulk energy (default classical location of i)")
        p.add_argument("--x", type=_float_list, help="rescaled positions")
        p.add_argument("--backend", choices=("dense", "tridiagonal"))
        p.add_argument("--t-exponents", dest="t_exponents", type=_float_list)
        p.add_argument("--jobs", type=int)
        p.add_argument("--gaudin-route", dest="gaudin_route", choices=("fredholm", "painleve"))
    return parser


_OVERRIDES = ("n", "samples", "seed", "s_grid", "ensemble", "out", "quad_order", "i", "u", "x",
              "backend", "t_exponents", "jobs", "gaudin_route")


def resolve_config(args) -> ExperimentConfig:
    base = ExperimentConfig(experiment=args.experiment)
    if args.config:
        base = ExperimentConfig.from_text(Path(args.config).read_text(), base)
        base = base.replace(experiment=args.experiment)
    changes = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    return base.replace(**changes).validate()


def _error_record(exc: BaseException, out) -> dict:
    record = {
        "status": "error",
        "type": type(exc).__name__,
        "message": str(exc),
    }
    if not isinstance(exc, ConfigError):
        record["traceback"] = traceback.format_exc()
    text = json.dumps(record)
    print(text, file=sys.stderr)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text)
        except OSError:
            pass
    return record


def main(argv=None) -> int:
    out = None
    try:
        args = build_parser().parse_args(argv)
        out = getattr(args, "out", None)
        config = resolve_config(args)
        out = config.out or "."
        report = run_experiment(config)
        paths = write_outputs(report, config, out)
        print(json.dumps({"status": "ok", "experiment": config.experiment,
                          "cells": len(report.cells),
                          "outputs": {k: str(v) for k, v in paths.items()}}))
        return 0
    except ConfigError as exc:
        _error_record(exc, out)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 -- every failure becomes a record
        _error_record(exc, out)
        return 1


if __name__ == "__main__":
    sys.exit(main())
