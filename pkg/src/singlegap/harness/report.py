"""Experiment reports and their CSV / JSON serialisation.

The CSV holds one row per cell with a fixed column set per experiment
(``COLUMNS``); the JSON holds everything, including provenance and any
per-cell arrays, and reloads bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["COLUMNS", "ExperimentReport", "emit_report", "load_report", "provenance"]

_BASE = ["experiment", "n", "samples", "seed"]

COLUMNS = {
    "single-gap": _BASE + ["ensemble", "backend", "i", "u", "ks", "ks_pvalue", "cvm",
                           "cvm_pvalue", "mean_x", "var_x"],
    "averaged-gap": _BASE + ["u", "t_exponent", "t_n", "s", "mean_S", "se_S", "target",
                             "abs_err"],
    "gustavsson": _BASE + ["i", "u", "x", "mean_count", "mean_shift", "var_count",
                           "var_target", "var_ratio", "var_exact", "ks_normal",
                           "ks_pvalue", "cvm"],
    "independence": _BASE + ["i", "u", "x", "s", "joint", "marginal", "hole", "product",
                             "diff", "mu", "mu_tilde", "sigma2", "sigma2_tilde", "M",
                             "hypothesis_holds"],
    "gap-energy": _BASE + ["u", "x", "s", "t_n", "exact", "sine", "abs_diff", "mc",
                           "mc_se", "mc_z"],
    "kernel-convergence": _BASE + ["u", "d_full", "d_truncated", "L", "tail_mass", "t_n"],
    "gaudin-table": _BASE + ["s", "E_fredholm", "E_painleve", "abs_diff", "cdf", "p"],
}


def _clean(value):
    """Make a value JSON-safe while keeping floats bit-exact."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    return value


def provenance(config) -> dict:
    import scipy

    from .. import __version__

    return {
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "versions": {
            "singlegap": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    cells: list = field(default_factory=list)
    arrays: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def columns(self) -> list:
        cols = list(COLUMNS.get(self.experiment, _BASE))
        for cell in self.cells:
            cols += [k for k in cell if k not in cols]
        return cols

    def add(self, **cell) -> dict:
        missing = [k for k in ("n", "samples", "seed") if k not in cell]
        if missing:
            raise ValueError(f"cell lacks {missing}")
        cell = {"experiment": self.experiment, **cell}
        self.cells.append(cell)
        return cell

    def column(self, name: str) -> list:
        return [c.get(name) for c in self.cells]

    def to_json(self) -> dict:
        return _clean({
            "experiment": self.experiment,
            "config": self.config,
            "provenance": self.provenance,
            "notes": self.notes,
            "cells": self.cells,
            "arrays": self.arrays,
        })

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentReport":
        def restore(v):
            if isinstance(v, str) and v in ("nan", "inf", "-inf"):
                return float(v)
            if isinstance(v, list):
                return [restore(x) for x in v]
            if isinstance(v, dict):
                return {k: restore(x) for k, x in v.items()}
            return v

        return cls(
            data["experiment"],
            data["config"],
            [restore(c) for c in data["cells"]],
            restore(data.get("arrays", {})),
            data.get("provenance", {}),
            data.get("notes", []),
        )


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "json")) -> dict:
    """Write report.csv and/or report.json into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if "csv" in formats:
        path = out / "report.csv"
        cols = report.columns
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, restval="")
            w.writeheader()
            for cell in report.cells:
                w.writerow({k: _csv_value(cell.get(k)) for k in cols})
        paths["csv"] = path
    if "json" in formats:
        path = out / "report.json"
        path.write_text(json.dumps(report.to_json(), indent=1))
        paths["json"] = path
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}")
    return paths


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_json(json.loads(Path(path).read_text()))
