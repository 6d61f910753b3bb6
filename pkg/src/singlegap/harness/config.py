"""Experiment configuration: a flat ``key = value`` text format with validation."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "load_config"]

EXPERIMENTS = (
    "single-gap",
    "averaged-gap",
    "gustavsson",
    "independence",
    "gap-energy",
    "kernel-convergence",
    "gaudin-table",
)

ENSEMBLES = ("gue", "matched", "both")


class ConfigError(ValueError):
    pass


def _tuple_of(kind):
    def parse(text: str):
        text = text.strip().strip("()[]")
        if not text:
            return ()
        return tuple(kind(v) for v in text.replace(" ", "").split(",") if v)
    return parse


def _optional(kind):
    def parse(text: str):
        text = text.strip()
        return None if text in ("", "none", "None") else kind(text)
    return parse


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    """Every knob of a run. ``i`` and ``u`` default to n//2 and its classical location."""

    experiment: str = "single-gap"
    n: tuple = (100, 400)
    samples: int = 2000
    seed: int = 0
    i: Optional[int] = None
    u: Optional[float] = None
    x: tuple = (0.0,)
    s_grid: tuple = (0.5, 1.0, 2.0)
    ensemble: str = "both"
    backend: str = "tridiagonal"
    t_exponents: tuple = (0.6,)
    quad_order: Optional[int] = None
    L_grid: tuple = (20.0, 40.0, 80.0, 160.0)
    y_points: int = 11
    exact: bool = True
    max_exact_n: int = 1000
    jobs: int = 1
    gaudin_route: str = "fredholm"
    gaudin_table: Optional[str] = None
    out: Optional[str] = None

    _PARSERS = {
        "experiment": str,
        "n": _tuple_of(int),
        "samples": int,
        "seed": int,
        "i": _optional(int),
        "u": _optional(float),
        "x": _tuple_of(float),
        "s_grid": _tuple_of(float),
        "ensemble": str,
        "backend": str,
        "t_exponents": _tuple_of(float),
        "quad_order": _optional(int),
        "L_grid": _tuple_of(float),
        "y_points": int,
        "exact": _bool,
        "max_exact_n": int,
        "jobs": int,
        "gaudin_route": str,
        "gaudin_table": _optional(str),
        "out": _optional(str),
    }

    def __post_init__(self):
        for name in ("n", "x", "s_grid", "t_exponents", "L_grid"):
            val = getattr(self, name)
            if not isinstance(val, tuple):
                setattr(self, name, tuple(val) if hasattr(val, "__iter__") else (val,))

    # -- validation ---------------------------------------------------------
    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.n:
            raise ConfigError("n list is empty")
        if any(k < 8 for k in self.n):
            raise ConfigError("every n must be >= 8")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.y_points < 1 or self.jobs < 1:
            raise ConfigError("counts must be >= 1")
        if not self.s_grid or any(not (s > 0 and math.isfinite(s)) for s in self.s_grid):
            raise ConfigError("s grid must be non-empty with every s > 0")
        if self.ensemble not in ENSEMBLES:
            raise ConfigError(f"ensemble must be one of {ENSEMBLES}")
        if self.backend not in ("dense", "tridiagonal"):
            raise ConfigError("backend must be dense or tridiagonal")
        if self.gaudin_route not in ("fredholm", "painleve"):
            raise ConfigError("gaudin_route must be fredholm or painleve")
        if self.u is not None and not -2.0 < self.u < 2.0:
            raise ConfigError("u must lie in (-2, 2)")
        if self.i is not None and any(not 1 <= self.i <= k - 1 for k in self.n):
            raise ConfigError("i must satisfy 1 <= i <= n-1 for every n")
        if self.quad_order is not None and self.quad_order < 4:
            raise ConfigError("quad_order must be >= 4")
        if not self.t_exponents or any(t <= 0 for t in self.t_exponents):
            raise ConfigError("t exponents must be positive")
        if any(L <= 0 for L in self.L_grid):
            raise ConfigError("L grid must be positive")
        if self.experiment in ("independence", "gap-energy", "kernel-convergence"):
            big = [k for k in self.n if k > self.max_exact_n]
            if big:
                raise ConfigError(f"exact kernel computations capped at n <= {self.max_exact_n}: {big}")
        return self

    # -- derived quantities ---------------------------------------------------
    def index_for(self, n: int) -> int:
        return self.i if self.i is not None else n // 2

    def t_n(self, n: int, exponent: Optional[float] = None) -> float:
        """Window half-width log(n)^a in mean spacings (a = first configured exponent)."""
        a = self.t_exponents[0] if exponent is None else exponent
        return math.log(n) ** a

    @staticmethod
    def clt_scale(n: int) -> float:
        """sqrt(log n / 2 pi^2), the fluctuation scale of a bulk eigenvalue in mean spacings."""
        return math.sqrt(math.log(n) / (2.0 * math.pi**2))

    # -- serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ",".join(repr(v) for v in val)
            elif val is None:
                val = "none"
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_text(cls, text: str, base: Optional["ExperimentConfig"] = None) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (p.strip() for p in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in cls._PARSERS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = cls._PARSERS[key](val)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        base = base or cls()
        return dataclasses.replace(base, **values)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path


def load_config(path, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_text(Path(path).read_text())
    if overrides:
        cfg = cfg.replace(**{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()
