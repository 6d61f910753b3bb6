"""The Gaudin-Mehta spacing law of the sine process, by two independent routes.

E(s) = det(1 - 1_[0,s] P_sine 1_[0,s]) is computed either as a Nystrom
Fredholm determinant or from the Jimbo-Miwa-Mori sigma-form of Painleve V,

    (x s'')^2 + 4 (x s' - s)(x s' - s + s'^2) = 0,   s(x) ~ -x/pi,

through E(s) = exp(int_0^{pi s} sigma(x)/x dx). The spacing density is
p = E'' and its distribution function is F(s) = 1 + E'(s).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_simpson, simpson, solve_ivp
from scipy.interpolate import PchipInterpolator

from .kernels import sine_kernel_function
from .operators import discretize, fredholm_det

__all__ = [
    "GapLawTable",
    "QuadratureError",
    "PainleveBranchError",
    "sine_gap_determinant",
    "gap_function_fredholm",
    "gap_function_painleve",
    "gaudin_cdf",
    "gaudin_density",
    "wigner_surmise",
    "default_table",
]

DEFAULT_S_MAX = 6.0
DEFAULT_STEP = 1e-2
_PI = math.pi

# Taylor coefficients of sigma(x) = sum c_k x^k about 0, obtained by
# substituting a power series into the sigma-form with c_1 = -1/pi and the
# branch c_2 = -1/pi^2.
_P2, _P4, _P6, _P8 = _PI**2, _PI**4, _PI**6, _PI**8
_SIGMA_SERIES = (
    0.0,
    -1.0 / _PI,
    -1.0 / _P2,
    -1.0 / _PI**3,
    (_P2 - 9.0) / (9.0 * _P4),
    (5.0 * _P2 - 36.0) / (36.0 * _PI**5),
    (-450.0 - 4.0 * _P4 + 75.0 * _P2) / (450.0 * _P6),
    (-28.0 * _P4 - 2700.0 + 525.0 * _P2) / (2700.0 * _PI**7),
    (-5929.0 * _P4 - 396900.0 + 180.0 * _P6 + 88200.0 * _P2) / (396900.0 * _P8),
    (-32193.0 * _P4 - 1587600.0 + 761.0 * _P6 + 396900.0 * _P2) / (1587600.0 * _PI**9),
)


class QuadratureError(RuntimeError):
    pass


class PainleveBranchError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GapLawTable:
    """E, p = E'' and F = int_0^s p on a uniform grid starting at 0."""

    s: np.ndarray
    E: np.ndarray
    p: np.ndarray
    cdf: np.ndarray
    route: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def step(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def surmise(self) -> np.ndarray:
        return wigner_surmise(self.s)

    def cdf_function(self):
        """Vectorised F(s), equal to 0 below 0 and to the last table value above s_max."""
        interp = PchipInterpolator(self.s, self.cdf, extrapolate=False)
        lo, hi = self.s[0], self.s[-1]
        top = float(self.cdf[-1])

        def F(x):
            x = np.asarray(x, dtype=float)
            out = np.where(x <= lo, 0.0, np.where(x >= hi, top, interp(np.clip(x, lo, hi))))
            return out[()] if out.ndim == 0 else out

        return F

    def normalization(self) -> float:
        return float(simpson(self.p, x=self.s))

    def mean(self) -> float:
        return float(simpson(self.s * self.p, x=self.s))

    def to_csv(self, path) -> Path:
        """Columns: s, E, p, cdf, route, surmise (diagnostic only)."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "E", "p", "cdf", "route", "surmise"])
            for row in zip(self.s, self.E, self.p, self.cdf, self.surmise):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3])), self.route, repr(float(row[4]))])
        return path

    @classmethod
    def from_csv(cls, path) -> "GapLawTable":
        with Path(path).open() as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty gap table")
        col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        return cls(col("s"), col("E"), col("p"), col("cdf"), rows[0]["route"])


def wigner_surmise(s):
    """(pi/2) s exp(-pi s^2/4); emitted for comparison only."""
    s = np.asarray(s, dtype=float)
    return 0.5 * _PI * s * np.exp(-_PI * s * s / 4.0)


def _grid(s_max: float, step: float) -> np.ndarray:
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    if not 0 < step < s_max:
        raise ValueError("step must lie in (0, s_max)")
    k = int(round(s_max / step))
    return step * np.arange(k + 1)


# ---------------------------------------------------------------------------
# Fredholm route
# ---------------------------------------------------------------------------

def sine_gap_determinant(s: float, order: int = 64) -> float:
    """det(1 - 1_[0,s] P_sine 1_[0,s]).

    Negative s gives the analytic continuation through the unsymmetrised
    Nystrom matrix, which the finite differences at the origin use.
    """
    if s == 0:
        return 1.0
    if s > 0:
        return fredholm_det(discretize(sine_kernel_function(), (0.0, s), order))
    t, w = leggauss(order)
    x = 0.5 * s * (t + 1.0)
    a = np.sinc(x[:, None] - x[None, :]) * (0.5 * s * w)[None, :]
    return float(np.linalg.det(np.eye(order) - a))


def _converged_order(s_max: float, start: int = 32, rtol: float = 1e-10) -> int:
    m = start
    while m < 1024:
        e1 = sine_gap_determinant(min(s_max, 4.0), m)
        e2 = sine_gap_determinant(min(s_max, 4.0), 2 * m)
        if abs(e1 - e2) <= rtol * abs(e2):
            return 2 * m
        m *= 2
    raise QuadratureError("Nystrom determinant did not converge")


def gap_function_fredholm(s_max: float = DEFAULT_S_MAX, step: float = DEFAULT_STEP,
                          order: int = None) -> GapLawTable:
    """Gap-law table from Fredholm determinants.

    p uses second central differences of E at steps h and 2h combined by
    Richardson extrapolation; F integrates p (cumulative Simpson) and is
    cross-checked against 1 + E'.
    """
    s = _grid(s_max, step)
    if order is None:
        order = _converged_order(s_max)
    k = len(s)
    ext = step * np.arange(-2, k + 2)
    E_ext = np.array([sine_gap_determinant(v, order) for v in ext])
    E = E_ext[2:-2]
    if np.any(np.diff(E) > 1e-13):
        raise QuadratureError("gap determinant is not monotone; raise the quadrature order")
    h = step
    c = slice(2, k + 2)
    d2_h = (E_ext[3:k + 3] - 2.0 * E_ext[c] + E_ext[1:k + 1]) / h**2
    d2_2h = (E_ext[4:k + 4] - 2.0 * E_ext[c] + E_ext[0:k]) / (2.0 * h) ** 2
    p = (4.0 * d2_h - d2_2h) / 3.0
    d1_h = (E_ext[3:k + 3] - E_ext[1:k + 1]) / (2.0 * h)
    d1_2h = (E_ext[4:k + 4] - E_ext[0:k]) / (4.0 * h)
    dE = (4.0 * d1_h - d1_2h) / 3.0
    cdf = np.concatenate([[0.0], cumulative_simpson(p, x=s)])
    diag = {
        "order": order,
        "cdf_vs_dE": float(np.abs(cdf - (1.0 + dE)).max()),
        "min_p": float(p.min()),
    }
    return GapLawTable(s, E, p, np.clip(cdf, 0.0, 1.0), "fredholm", diag)


# ---------------------------------------------------------------------------
# Painleve route
# ---------------------------------------------------------------------------

def _series(x: float):
    c = _SIGMA_SERIES
    sig = sum(ck * x**k for k, ck in enumerate(c))
    d1 = sum(k * ck * x ** (k - 1) for k, ck in enumerate(c) if k >= 1)
    d2 = sum(k * (k - 1) * ck * x ** (k - 2) for k, ck in enumerate(c) if k >= 2)
    integral = sum(ck * x**k / k for k, ck in enumerate(c) if k >= 1)
    return sig, d1, d2, integral


def _discriminant(x, sig, d1):
    q = x * d1 - sig
    return -q * (q + d1 * d1)


def _rhs(x, y):
    sig, d1, _ = y
    disc = _discriminant(x, sig, d1)
    # concave branch continuous with sigma'' ~ -2/pi^2 at the origin
    return [d1, -2.0 / x * math.sqrt(max(disc, 0.0)), sig / x]


def _integrate_sigma(x0: float, x_eval: np.ndarray, rtol: float):
    sig, d1, d2, integral = _series(x0)
    disc = _discriminant(x0, sig, d1)
    if disc < 0:
        raise PainleveBranchError(f"negative discriminant {disc:.3e} at x0={x0}")
    d2_quad = -2.0 / x0 * math.sqrt(disc)
    if abs(d2_quad - d2) > 1e-6 * abs(d2):
        raise PainleveBranchError("initial data inconsistent with the sigma-form")
    x_eval = np.asarray(x_eval, dtype=float)
    sol = solve_ivp(_rhs, (x0, max(float(x_eval.max()), x0 * 1.0001)), [sig, d1, integral],
                    method="DOP853", rtol=rtol, atol=1e-14, t_eval=x_eval, dense_output=False)
    if sol.status != 0:
        raise PainleveBranchError(f"integration failed: {sol.message}")
    sig_t, d1_t, int_t = sol.y
    disc_t = _discriminant(sol.t, sig_t, d1_t)
    scale = np.maximum(np.abs(sig_t) + np.abs(d1_t), 1.0) ** 3
    if np.any(disc_t < -1e-8 * scale):
        raise PainleveBranchError("discriminant turned negative along the solution")
    return sig_t, d1_t, int_t


def gap_function_painleve(s_max: float = DEFAULT_S_MAX, step: float = DEFAULT_STEP,
                          x0: float = 0.05, rtol: float = 1e-12) -> GapLawTable:
    """Gap-law table from the sigma-form ODE.

    The ODE starts at x0 from a ninth-order Taylor expansion of sigma. With
    x = pi s, p(s) = E (sigma^2 + x sigma' - sigma) / s^2 and F(s) = 1 + E sigma / s.
    """
    s = _grid(s_max, step)
    x = _PI * s
    sig = np.empty_like(s)
    d1 = np.empty_like(s)
    logE = np.empty_like(s)
    near = x <= x0
    for idx in np.flatnonzero(near):
        sg, dd, _, it = _series(x[idx])
        sig[idx], d1[idx], logE[idx] = sg, dd, it
    far = ~near
    sig[far], d1[far], logE[far] = _integrate_sigma(x0, x[far], rtol)
    E = np.exp(logE)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = E * (sig * sig + x * d1 - sig) / (s * s)
        cdf = 1.0 + E * sig / s
    p[0] = 0.0
    cdf[0] = 0.0
    # sensitivity to the starting point, as a diagnostic
    _, _, int_half = _integrate_sigma(0.5 * x0, x[far][-1:], rtol)
    diag = {"x0": x0, "x0_sensitivity": float(abs(int_half[0] - logE[-1]))}
    return GapLawTable(s, E, p, np.clip(cdf, 0.0, 1.0), "painleve", diag)


def gaudin_cdf(s: float, table: GapLawTable) -> float:
    """P(gap <= s) under the Gaudin law, interpolated from ``table``."""
    if not 0.0 <= s <= table.s_max:
        raise ValueError(f"s={s} outside the table range [0, {table.s_max}]")
    return float(table.cdf_function()(s))


def gaudin_density(s, table: GapLawTable):
    interp = PchipInterpolator(table.s, table.p, extrapolate=False)
    out = np.nan_to_num(interp(np.asarray(s, dtype=float)), nan=0.0)
    return out[()] if out.ndim == 0 else out


_DEFAULT = {}


def default_table() -> GapLawTable:
    """Memoised Fredholm table on [0, 6] with step 0.01."""
    if "table" not in _DEFAULT:
        _DEFAULT["table"] = gap_function_fredholm()
    return _DEFAULT["table"]
