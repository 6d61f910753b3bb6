"""Analytic kernels and densities for the Gaussian Unitary Ensemble.

Conventions: GUE matrices have off-diagonal entries drawn from N(0,1)_C and
diagonal entries from N(0,1)_R, so the spectrum fills [-2 sqrt(n), 2 sqrt(n)].
The eigenvalue process is determinantal with kernel

    K_n(x, y) = sum_{k<n} psi_k(x) psi_k(y),   psi_k(x) = P_k(x) exp(-x^2/4),

where P_k are the orthonormal polynomials for the weight exp(-x^2/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SemicircleDensity",
    "HermiteBasis",
    "KernelFunction",
    "semicircle_density",
    "semicircle_cdf",
    "classical_location",
    "hermite_functions",
    "gue_kernel",
    "rescaled_kernel",
    "sine_kernel",
    "correlation_fn",
    "sine_kernel_function",
    "gue_kernel_function",
    "rescaled_kernel_function",
    "custom_kernel",
]

_PSI0 = (2.0 * math.pi) ** -0.25
# mantissas above this are renormalised by an exact power of two
_RESCALE_AT = 2.0**200
_RESCALE_EXP = -200


# ---------------------------------------------------------------------------
# semicircle law
# ---------------------------------------------------------------------------

def semicircle_density(u):
    """rho_sc(u) = sqrt((4 - u^2)_+) / (2 pi). Accepts scalars or arrays."""
    u = np.asarray(u, dtype=float)
    out = np.sqrt(np.maximum(4.0 - u * u, 0.0)) / (2.0 * math.pi)
    return out[()] if out.ndim == 0 else out


def semicircle_cdf(u):
    """Closed-form antiderivative of the semicircle density, clipped to [0, 1]."""
    v = np.clip(np.asarray(u, dtype=float), -2.0, 2.0)
    out = v * np.sqrt(4.0 - v * v) / (4.0 * math.pi) + np.arcsin(v / 2.0) / math.pi + 0.5
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SemicircleDensity:
    """Callable wrapper around the semicircle law."""

    def __call__(self, u):
        return semicircle_density(u)

    def cdf(self, u):
        return semicircle_cdf(u)

    def quantile(self, q: float) -> float:
        return _semicircle_quantile(q)


def _semicircle_quantile(q: float, tol: float = 1e-12) -> float:
    if q <= 0.0:
        return -2.0
    if q >= 1.0:
        return 2.0
    lo, hi = -2.0, 2.0
    # bisection to a bracket narrow enough for Newton to be safe
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if semicircle_cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    for _ in range(50):
        f = semicircle_cdf(u) - q
        d = semicircle_density(u)
        if d <= 0.0:
            break
        step = f / d
        u_new = min(max(u - step, lo), hi)
        if abs(u_new - u) < tol:
            u = u_new
            break
        u = u_new
    return float(u)


def classical_location(i: int, n: int) -> float:
    """Energy u with semicircle mass i/n to its left (the classical location)."""
    if n < 1 or not 1 <= i <= n:
        raise ValueError(f"index i={i} outside 1..n with n={n}")
    if 2 * i == n:
        return 0.0
    return _semicircle_quantile(i / n)


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------

def hermite_functions(x, n: int) -> np.ndarray:
    """Return psi_0..psi_{n-1} at x, shape ``x.shape + (n,)``.

    The three-term recurrence runs on mantissas with the Gaussian factor kept
    as a separate log-scale, renormalised by exact powers of two. This stays
    finite for n in the thousands and |x| several times sqrt(n), where the
    plain recurrence under- or overflows.
    """
    if n < 1:
        raise ValueError("need at least one basis function")
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n,))
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PSI0)
    log_scale = -0.25 * x * x
    factor = np.exp(log_scale)
    out[..., 0] = cur * factor
    for k in range(1, n):
        nxt = (x * cur - math.sqrt(k - 1) * prev) / math.sqrt(k)
        prev, cur = cur, nxt
        if np.max(np.abs(cur), initial=0.0) > _RESCALE_AT:
            big = np.abs(cur) > _RESCALE_AT
            cur = np.where(big, np.ldexp(cur, _RESCALE_EXP), cur)
            prev = np.where(big, np.ldexp(prev, _RESCALE_EXP), prev)
            log_scale = np.where(big, log_scale - _RESCALE_EXP * math.log(2.0), log_scale)
            factor = np.exp(log_scale)
        out[..., k] = cur * factor
    return out


@dataclass(frozen=True)
class HermiteBasis:
    """The first ``n`` Hermite functions, an orthonormal basis of V^(n)."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("rank must be >= 1")

    def __call__(self, x) -> np.ndarray:
        return hermite_functions(x, self.n)

    def edge(self) -> float:
        # the functions are negligible (< 1e-16 relative) beyond this point
        return 2.0 * math.sqrt(self.n) + 10.0


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelFunction:
    """A symmetric real kernel K(x, y), vectorised over broadcastable inputs.

    ``features`` (optional) maps points to an ``(m, rank)`` array F with
    K(x, y) = F(x) @ F(y).T; operators use it to assemble Gram matrices
    without any cancellation.
    """

    evaluator: Callable
    kind: str
    params: dict = field(default_factory=dict)
    rank: Optional[int] = None
    features: Optional[Callable] = None
    diagonal_one: bool = False

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def matrix(self, x, y=None) -> np.ndarray:
        """Kernel matrix [K(x_i, y_j)]."""
        x = np.asarray(x, dtype=float)
        y = x if y is None else np.asarray(y, dtype=float)
        if self.features is not None:
            fx = self.features(x)
            fy = fx if y is x else self.features(y)
            return fx @ fy.T
        return self(x[:, None], y[None, :])

    def diagonal(self, x) -> np.ndarray:
        return np.asarray(self(x, x), dtype=float)


def sine_kernel(x, y):
    """Dyson sine kernel sin(pi(x-y)) / (pi(x-y)), equal to 1 on the diagonal."""
    out = np.sinc(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def _christoffel_darboux(n: int, x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x = x.ravel()
    y = y.ravel()
    n_eval = n + 1
    px = hermite_functions(x, n_eval)
    py = hermite_functions(y, n_eval)
    diff = x - y
    on_diag = np.abs(diff) <= 1e-10 * (1.0 + np.abs(x))
    out = np.empty_like(x)
    rn = math.sqrt(n)
    off = ~on_diag
    if off.any():
        num = px[off, n] * py[off, n - 1] - px[off, n - 1] * py[off, n]
        out[off] = rn * num / diff[off]
    if on_diag.any():
        # K_n(x, x) = n psi_{n-1}^2 - sqrt(n(n-1)) psi_n psi_{n-2}
        p = px[on_diag]
        val = n * p[:, n - 1] ** 2
        if n >= 2:
            val = val - math.sqrt(n * (n - 1)) * p[:, n] * p[:, n - 2]
        out[on_diag] = val
    return out.reshape(shape)


def gue_kernel(n: int, x, y):
    """K_n(x, y) for the unscaled GUE, via the Christoffel-Darboux formula."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = _christoffel_darboux(n, x, y)
    return out[()] if out.ndim == 0 else out


def _check_bulk(u: float) -> float:
    if not -2.0 < u < 2.0:
        raise ValueError(f"energy u={u} is not in the bulk (-2, 2)")
    return float(u)


def _rescaling(n: int, u: float) -> tuple[float, float]:
    scale = float(semicircle_density(u)) * math.sqrt(n)
    return scale, u * math.sqrt(n)


def rescaled_kernel(n: int, u: float, x, y):
    """Bulk-rescaled kernel K_n(shift + x/c, shift + y/c) / c with c = rho_sc(u) sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = _check_bulk(u)
    c, shift = _rescaling(n, u)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = _christoffel_darboux(n, shift + x / c, shift + y / c) / c
    return out[()] if out.ndim == 0 else out


def correlation_fn(kernel, points) -> float:
    """k-point correlation det[K(x_i, x_j)]; the empty determinant is 1."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 1.0
    if isinstance(kernel, KernelFunction):
        mat = kernel.matrix(pts)
    else:
        mat = kernel(pts[:, None], pts[None, :])
    mat = 0.5 * (mat + mat.T)
    return float(np.linalg.det(mat))


# ---------------------------------------------------------------------------
# KernelFunction constructors
# ---------------------------------------------------------------------------

def sine_kernel_function() -> KernelFunction:
    return KernelFunction(sine_kernel, kind="sine", diagonal_one=True)


def gue_kernel_function(n: int) -> KernelFunction:
    basis = HermiteBasis(n)
    return KernelFunction(
        lambda x, y: gue_kernel(n, x, y),
        kind="gue",
        params={"n": n},
        rank=n,
        features=basis,
    )


def rescaled_kernel_function(n: int, u: float = 0.0) -> KernelFunction:
    u = _check_bulk(u)
    c, shift = _rescaling(n, u)

    def features(x):
        return hermite_functions(shift + np.asarray(x, dtype=float) / c, n) / math.sqrt(c)

    return KernelFunction(
        lambda x, y: rescaled_kernel(n, u, x, y),
        kind="rescaled",
        params={"n": n, "u": u},
        rank=n,
        features=features,
    )


def custom_kernel(func: Callable, rank: Optional[int] = None, **params) -> KernelFunction:
    """Wrap an arbitrary two-argument function; the result is symmetrised."""

    def evaluator(x, y):
        return 0.5 * (func(x, y) + func(y, x))

    return KernelFunction(evaluator, kind="custom", params=params, rank=rank)
