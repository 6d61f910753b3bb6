"""Nystrom discretisation of integral operators and the projection calculus.

An integral operator T with kernel K restricted to [a, b] is represented by
Gauss-Legendre nodes x_i, weights w_i and the symmetric matrix

    A_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j),

whose eigenvalues and singular values converge spectrally to those of T for
analytic kernels. Finite-rank projections are carried by an evaluable
orthonormal basis; their interval restrictions reduce to n x n Gram
matrices.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .kernels import (
    HermiteBasis,
    KernelFunction,
    _check_bulk,
    _rescaling,
    hermite_functions,
    semicircle_density,
)

__all__ = [
    "DiscretizationError",
    "DegenerateConditioningError",
    "HypothesisError",
    "DiscretizedOperator",
    "NormReport",
    "FiniteRankProjection",
    "ResolventK0",
    "PerturbationBound",
    "gauss_legendre",
    "composite_rule",
    "discretize",
    "fredholm_det",
    "operator_spectrum",
    "norms",
    "matrix_norms",
    "hermite_projection",
    "rescaled_gue_projection",
    "orthonormalize",
    "condition_on_empty",
    "projection_hs_distance",
    "conditioned_difference_nuclear",
    "fredholm_resolvent_K0",
    "check_perturbation",
    "perturbation_bound_M",
    "dump_operator",
    "load_operator",
]

CLAMP_TOL = 1e-12
LEAK_TOL = 1e-6
PANEL_ORDER = 24


class DiscretizationError(RuntimeError):
    """Spectrum of a discretised projection restriction left [0, 1]."""


class DegenerateConditioningError(RuntimeError):
    """An element of the subspace is numerically supported in the excluded interval."""


class HypothesisError(RuntimeError):
    """The closeness hypothesis needed for the perturbation bound failed."""


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def gauss_legendre(a: float, b: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """m-point Gauss-Legendre rule mapped to [a, b]."""
    t, w = leggauss(m)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * t, half * w


def composite_rule(a: float, b: float, panel: float, order: int = PANEL_ORDER, breaks=()):
    """Panel-wise Gauss-Legendre rule on [a, b], split at ``breaks``.

    Returns (nodes, weights); empty arrays when a >= b.
    """
    if not b > a:
        return np.empty(0), np.empty(0)
    cuts = sorted({a, b, *(c for c in breaks if a < c < b)})
    t, w = leggauss(order)
    xs, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        k = max(1, int(math.ceil((hi - lo) / panel)))
        edges = np.linspace(lo, hi, k + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        xs.append((mid + half * t).ravel())
        ws.append((half * w).ravel())
    return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# discretised operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    interval: tuple[float, float]
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def det(self) -> float:
        return fredholm_det(self)

    def spectrum(self) -> np.ndarray:
        return operator_spectrum(self)

    def norms(self) -> "NormReport":
        return norms(self)

    def trace(self) -> float:
        return float(np.trace(self.matrix))


def _as_interval(interval) -> tuple[float, float]:
    a, b = (float(v) for v in interval)
    if not b > a:
        raise ValueError(f"empty or inverted interval [{a}, {b}]")
    return a, b


def discretize(kernel, interval, order: int = 200, panel: Optional[float] = None) -> DiscretizedOperator:
    """Nystrom matrix of 1_I K 1_I.

    ``kernel`` is a KernelFunction, a FiniteRankProjection or a plain
    callable K(x, y). With ``panel`` set a composite rule is used, which is
    what long intervals with oscillating kernels need.
    """
    a, b = _as_interval(interval)
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    if panel is None:
        x, w = gauss_legendre(a, b, order)
    else:
        x, w = composite_rule(a, b, panel, order)
    sw = np.sqrt(w)
    features = getattr(kernel, "features", None)
    if features is not None:
        f = features(x) * sw[:, None]
        mat = f @ f.T
    elif isinstance(kernel, KernelFunction):
        mat = kernel.matrix(x) * np.outer(sw, sw)
    else:
        mat = np.asarray(kernel(x[:, None], x[None, :]), dtype=float) * np.outer(sw, sw)
    mat = 0.5 * (mat + mat.T)
    return DiscretizedOperator((a, b), x, w, mat)


def fredholm_det(op: DiscretizedOperator) -> float:
    """det(I - A) through an LU factorisation."""
    if op.size == 0:
        return 1.0
    sign, logdet = np.linalg.slogdet(np.eye(op.size) - op.matrix)
    return float(sign * math.exp(logdet)) if sign != 0 else 0.0


def operator_spectrum(op: DiscretizedOperator) -> np.ndarray:
    """Non-negligible eigenvalues of a projection restriction, descending, in (0, 1]."""
    if op.size == 0:
        return np.empty(0)
    lam = np.linalg.eigvalsh(op.matrix)
    return _clean_spectrum(lam)


def _clean_spectrum(lam: np.ndarray) -> np.ndarray:
    if lam.size and (lam.min() < -LEAK_TOL or lam.max() > 1.0 + LEAK_TOL):
        raise DiscretizationError(
            f"eigenvalues outside [0, 1]: min {lam.min():.3e}, max {lam.max():.3e}"
        )
    lam = np.clip(lam, 0.0, 1.0)
    return np.sort(lam[lam > CLAMP_TOL])[::-1]


@dataclass(frozen=True)
class NormReport:
    op_norm: float
    hs_norm: float
    nuclear_norm: float


def matrix_norms(mat) -> NormReport:
    """Operator, Hilbert-Schmidt and nuclear norms from singular values."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return NormReport(0.0, 0.0, 0.0)
    if mat.shape[0] == mat.shape[1] and np.array_equal(mat, mat.T):
        sv = np.abs(np.linalg.eigvalsh(mat))
    else:
        sv = np.linalg.svd(mat, compute_uv=False)
    return NormReport(float(sv.max()), float(np.sqrt(np.sum(sv * sv))), float(sv.sum()))


def norms(op) -> NormReport:
    if isinstance(op, DiscretizedOperator):
        return matrix_norms(op.matrix)
    return matrix_norms(op)


def dump_operator(op: DiscretizedOperator, path) -> Path:
    """Write an operator for offline inspection.

    ``.npz``: arrays ``interval``, ``nodes``, ``weights``, ``matrix``.
    ``.csv``: header ``node,weight,a_0..a_{m-1}``, one row per node, with the
    interval in a leading ``# interval a b`` comment line.
    """
    path = Path(path)
    if path.suffix == ".csv":
        with path.open("w", newline="") as fh:
            fh.write(f"# interval {op.interval[0]!r} {op.interval[1]!r}\n")
            writer = csv.writer(fh)
            writer.writerow(["node", "weight"] + [f"a_{j}" for j in range(op.size)])
            for i in range(op.size):
                writer.writerow([repr(float(op.nodes[i])), repr(float(op.weights[i]))]
                                + [repr(float(v)) for v in op.matrix[i]])
    else:
        np.savez(path, interval=np.asarray(op.interval), nodes=op.nodes,
                 weights=op.weights, matrix=op.matrix)
    return path


def load_operator(path) -> DiscretizedOperator:
    path = Path(path)
    if path.suffix == ".csv":
        with path.open() as fh:
            first = fh.readline().split()
            interval = (float(first[2]), float(first[3]))
            rows = list(csv.reader(fh))[1:]
        data = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), -1)
        if len(rows) == 0:
            return DiscretizedOperator(interval, np.empty(0), np.empty(0), np.empty((0, 0)))
        return DiscretizedOperator(interval, data[:, 0], data[:, 1], data[:, 2:])
    with np.load(path) as z:
        return DiscretizedOperator(tuple(z["interval"]), z["nodes"], z["weights"], z["matrix"])


# ---------------------------------------------------------------------------
# finite-rank projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteRankProjection:
    """Orthogonal projection onto span(phi_1..phi_n), given by its basis.

    ``support`` bounds the region where the basis is numerically non-zero;
    ``panel`` is the panel length that resolves products of basis functions;
    ``breakpoints`` lists jump locations (created by conditioning).
    """

    features: Callable
    rank: int
    support: tuple[float, float]
    panel: float
    breakpoints: tuple = ()
    label: str = "custom"
    tol: float = 1e-8

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        fx = self.features(x.ravel())
        fy = self.features(y.ravel())
        return np.sum(fx * fy, axis=1).reshape(x.shape)

    def kernel(self) -> KernelFunction:
        return KernelFunction(self, kind=self.label, params={}, rank=self.rank, features=self.features)

    def nodes(self, a: float = -math.inf, b: float = math.inf):
        lo = max(a, self.support[0])
        hi = min(b, self.support[1])
        return composite_rule(lo, hi, self.panel, PANEL_ORDER, self.breakpoints)

    def gram(self, a: float = -math.inf, b: float = math.inf, chunk: int = 4096) -> np.ndarray:
        """Gram matrix int_a^b phi phi^T; half-infinite ends are clipped to the support."""
        x, w = self.nodes(a, b)
        g = np.zeros((self.rank, self.rank))
        for start in range(0, len(x), chunk):
            f = self.features(x[start:start + chunk])
            g += (f * w[start:start + chunk, None]).T @ f
        return 0.5 * (g + g.T)

    def trace_density(self, x) -> np.ndarray:
        f = self.features(np.asarray(x, dtype=float))
        return np.sum(f * f, axis=1)

    def check_orthonormal(self) -> float:
        err = float(np.abs(self.gram() - np.eye(self.rank)).max())
        if err > self.tol:
            raise ValueError(f"basis is not orthonormal (max Gram error {err:.2e})")
        return err


def hermite_projection(n: int) -> FiniteRankProjection:
    """P^(n): projection onto the span of the first n Hermite functions."""
    basis = HermiteBasis(n)
    edge = basis.edge()
    panel = min(2.0, 2.0 * math.pi / math.sqrt(n))
    return FiniteRankProjection(basis, n, (-edge, edge), panel, label="gue")


def rescaled_gue_projection(n: int, u: float = 0.0) -> FiniteRankProjection:
    """The bulk-rescaled GUE projection with kernel (1/c) K_n(shift + x/c, shift + y/c)."""
    u = _check_bulk(u)
    c, shift = _rescaling(n, u)
    root_c = math.sqrt(c)

    def features(x):
        return hermite_functions(shift + np.asarray(x, dtype=float) / c, n) / root_c

    edge = HermiteBasis(n).edge()
    support = (c * (-edge - shift), c * (edge - shift))
    panel = 2.0 * float(semicircle_density(u)) * math.pi
    return FiniteRankProjection(features, n, support, panel, label="rescaled")


def orthonormalize(funcs: Callable, support, panel: float, label: str = "custom") -> FiniteRankProjection:
    """Projection onto the span of arbitrary (independent) functions.

    ``funcs`` maps points to an (m, n) array of function values.
    """
    probe = np.asarray(funcs(np.array([0.5 * (support[0] + support[1])])))
    n = probe.shape[1]
    x, w = composite_rule(support[0], support[1], panel)
    f = funcs(x)
    g = (f * w[:, None]).T @ f
    lam, vec = np.linalg.eigh(0.5 * (g + g.T))
    if lam.min() <= 1e-12 * lam.max():
        raise ValueError("functions are linearly dependent")
    coeff = vec / np.sqrt(lam)

    def features(pts):
        return funcs(np.asarray(pts, dtype=float)) @ coeff

    return FiniteRankProjection(features, n, tuple(support), panel, label=label)


def condition_on_empty(V: FiniteRankProjection, J, min_eig: float = 1e-10) -> FiniteRankProjection:
    """Projection onto 1_{J^c} V: the kernel of the process conditioned on no points in J.

    With G = Gram of the basis over J, the truncated functions 1_{J^c} phi
    have Gram matrix I - G, and C = (I - G)^{-1/2} turns them into an
    orthonormal basis. The resulting kernel equals
    1_{J^c} P (P 1_{J^c} P)_V^{-1} P 1_{J^c}.
    """
    a, b = (float(v) for v in J)
    if b < a:
        raise ValueError("inverted interval")
    if b == a:
        return V
    gJ = V.gram(a, b)
    if not np.any(gJ):
        return V
    comp = np.eye(V.rank) - gJ
    lam, vec = np.linalg.eigh(comp)
    if lam.min() <= min_eig:
        raise DegenerateConditioningError(
            f"smallest eigenvalue of the complement Gram matrix is {lam.min():.3e}"
        )
    coeff = (vec / np.sqrt(lam)) @ vec.T
    base = V.features

    def features(x):
        x = np.asarray(x, dtype=float)
        keep = (x < a) | (x > b)
        return (base(x) @ coeff) * keep[:, None]

    breaks = tuple(sorted(set(V.breakpoints) | {a, b}))
    return FiniteRankProjection(features, V.rank, V.support, V.panel, breaks,
                                label=f"{V.label}|empty[{a},{b}]", tol=V.tol)


def _common_rule(P: FiniteRankProjection, Q: FiniteRankProjection):
    lo = min(P.support[0], Q.support[0])
    hi = max(P.support[1], Q.support[1])
    breaks = tuple(sorted(set(P.breakpoints) | set(Q.breakpoints)))
    return composite_rule(lo, hi, min(P.panel, Q.panel), PANEL_ORDER, breaks)


def projection_hs_distance(P: FiniteRankProjection, Q: FiniteRankProjection) -> float:
    """||P - Q||_HS for orthogonal projections given by orthonormal bases.

    Uses ||P - Q||^2 = ||(1 - Q) P||^2 + ||(1 - P) Q||^2, with the residuals
    (1 - Q) phi formed pointwise; the textbook rank P + rank Q - 2 tr(PQ)
    cancels catastrophically and cannot resolve distances below ~1e-8.
    """
    x, w = _common_rule(P, Q)
    fp = P.features(x)
    fq = Q.features(x)
    cross = (fp * w[:, None]).T @ fq
    rp = fp - fq @ cross.T
    rq = fq - fp @ cross
    val = np.sum(rp * rp * w[:, None]) + np.sum(rq * rq * w[:, None])
    return math.sqrt(max(float(val), 0.0))


def conditioned_difference_nuclear(V: FiniteRankProjection, J) -> float:
    """||P~ - 1_{J^c} P 1_{J^c}||_{S^1} for the conditioned projection P~.

    Both operators have the form F M F^* with F = 1_{J^c} Phi, so the
    nuclear norm equals that of G^{1/2} M G^{1/2}, G = F^* F.
    """
    a, b = (float(v) for v in J)
    comp = np.eye(V.rank) - V.gram(a, b)
    lam, vec = np.linalg.eigh(comp)
    if lam.min() <= 1e-10:
        raise DegenerateConditioningError("complement Gram matrix is singular")
    root = (vec * np.sqrt(lam)) @ vec.T
    diff = (vec / lam) @ vec.T - np.eye(V.rank)
    return float(np.abs(np.linalg.eigvalsh(root @ diff @ root)).sum())


# ---------------------------------------------------------------------------
# resolvent of 1 - P0 1_J P0 and the perturbation bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResolventK0:
    """K_0 with (1 + K_0)(1 - P0 1_J P0) = 1, for a projection P0.

    Writing B = 1_J P0, one has P0 1_J P0 = B*B and
    K_0 = B* (1 - B B*)^{-1} B, where B B* = 1_J P0 1_J lives on L^2(J).
    Everything is therefore carried by the Nystrom matrix ``A`` of
    1_J P0 1_J and ``X = (I - A)^{-1}``; no truncation of the real line is
    involved. The kernel is

        K_0(x, y) = sum_ij P0(x, a_i) sqrt(w_i) X_ij sqrt(w_j) P0(a_j, y).
    """

    kernel: object
    J: tuple[float, float]
    nodes: np.ndarray
    weights: np.ndarray
    A: np.ndarray
    X: np.ndarray
    eigenvalues: np.ndarray

    @property
    def op_norm(self) -> float:
        lam = self.eigenvalues
        return float(np.max(lam / (1.0 - lam), initial=0.0))

    @property
    def nuclear_norm(self) -> float:
        lam = self.eigenvalues
        return float(np.sum(lam / (1.0 - lam)))

    @property
    def hs_norm(self) -> float:
        lam = self.eigenvalues
        return float(np.sqrt(np.sum((lam / (1.0 - lam)) ** 2)))

    @property
    def hs2_restricted(self) -> float:
        """||1_J P0||_HS^2 = tr(1_J P0 1_J)."""
        return float(np.trace(self.A))

    def _kmat(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.kernel
        if getattr(k, "features", None) is not None:
            return k.features(x) @ k.features(self.nodes).T
        return np.asarray(k(x[:, None], self.nodes[None, :]), dtype=float)

    def evaluate(self, x, y) -> np.ndarray:
        """Kernel matrix [K_0(x_i, y_j)]."""
        if self.nodes.size == 0:
            return np.zeros((np.size(x), np.size(y)))
        sw = np.sqrt(self.weights)
        left = self._kmat(x) * sw
        right = self._kmat(y) * sw
        return left @ self.X @ right.T

    def residual(self) -> float:
        """||(1 + K_0)(1 - P0 1_J P0) - 1||_op at this discretisation.

        Equals ||A^{1/2} (X - I - X A) A^{1/2}||_op; the same quantity is
        the residual of K_0 = (1 + K_0) P0 1_J P0.
        """
        if self.nodes.size == 0:
            return 0.0
        m = len(self.nodes)
        lam, vec = np.linalg.eigh(self.A)
        root = (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T
        core = self.X - np.eye(m) - self.X @ self.A
        return float(np.linalg.norm(root @ core @ root, 2))

    def fixed_point_residual(self, points) -> float:
        """max |K_0 - (1 + K_0) P0 1_J P0| over a grid of kernel points."""
        pts = np.asarray(points, dtype=float)
        if self.nodes.size == 0:
            return 0.0
        sw = np.sqrt(self.weights)
        kx = self._kmat(pts) * sw
        t = kx @ kx.T
        # int K_0(x, z) T(z, y) dz collapses through P0 P0 = P0
        k0t = kx @ self.X @ self.A @ kx.T
        return float(np.abs(self.evaluate(pts, pts) - (t + k0t)).max())

    def discretize(self, L: float, panel: float = 1.0, order: int = PANEL_ORDER) -> DiscretizedOperator:
        """Position-space matrix of K_0 on [-L, L] (composite Gauss-Legendre)."""
        x, w = composite_rule(-L, L, panel, order, self.J)
        sw = np.sqrt(w)
        mat = self.evaluate(x, x) * np.outer(sw, sw)
        return DiscretizedOperator((-L, L), x, w, 0.5 * (mat + mat.T))

    def truncated_residual(self, L: float, panel: float = 1.0) -> float:
        """Residual of the resolvent identity with every operator truncated to [-L, L]."""
        op = self.discretize(L, panel)
        x, w = op.nodes, op.weights
        sw = np.sqrt(w)
        inner, iw = self.nodes, self.weights
        kxa = self._kmat(x) * np.sqrt(iw)
        t = (kxa @ kxa.T) * np.outer(sw, sw)
        m = len(x)
        res = (np.eye(m) + op.matrix) @ (np.eye(m) - t) - np.eye(m)
        return float(np.linalg.norm(res, 2))


def fredholm_resolvent_K0(P0, J, order: int = 60, min_gap: float = 1e-10) -> ResolventK0:
    """Build K_0 for the projection kernel ``P0`` and interval J."""
    a, b = (float(v) for v in J)
    if b < a:
        raise ValueError("inverted interval")
    if b == a:
        empty = np.empty(0)
        return ResolventK0(P0, (a, b), empty, empty, np.empty((0, 0)), np.empty((0, 0)), empty)
    op = discretize(P0, (a, b), order)
    lam = np.linalg.eigvalsh(op.matrix)
    if lam.max() > 1.0 - min_gap:
        raise np.linalg.LinAlgError(
            f"1 - P0 1_J P0 is not invertible: top eigenvalue {lam.max():.12f}"
        )
    X = np.linalg.inv(np.eye(op.size) - op.matrix)
    X = 0.5 * (X + X.T)
    return ResolventK0(P0, (a, b), op.nodes, op.weights, op.matrix, X, np.clip(lam, 0.0, 1.0))


@dataclass(frozen=True)
class PerturbationBound:
    hyp_lhs: float          # ||(P0 - P) 1_J||_op
    hyp_rhs: float          # 1 / (4 (1 + ||K_0||_op))
    holds: bool
    k0_op: float
    hs2_P0: float           # ||1_J P0||_HS^2
    hs2_P: float            # ||1_J P||_HS^2
    M: float

    @property
    def s1_bound(self) -> float:
        """Right-hand side 3 (1 + ||K_0||)^2 (...) of the S^1 estimate."""
        return 3.0 * self.M


def _restricted_difference_op_norm(P: FiniteRankProjection, P0, J, order: int) -> float:
    """||(P0 - P) 1_J||_op for projections P (finite rank) and P0.

    On L^2(J), D*D = P0 + P - (P0 P + P P0) restricted to J, and the cross
    term int P0(x, y) K_P(x, y') dx is integrated over the support of P.
    """
    a, b = J
    y, wy = gauss_legendre(a, b, order)
    sy = np.sqrt(wy)
    x, wx = P.nodes()
    fx = P.features(x)
    fy = P.features(y)
    if getattr(P0, "features", None) is not None:
        k0_xy = P0.features(x) @ P0.features(y).T
        k0_yy = P0.features(y) @ P0.features(y).T
    else:
        k0_xy = np.asarray(P0(x[:, None], y[None, :]), dtype=float)
        k0_yy = np.asarray(P0(y[:, None], y[None, :]), dtype=float)
    kp_yy = fy @ fy.T
    proj0 = (k0_xy * wx[:, None]).T @ fx          # (P0 phi_k)(y)
    cross = proj0 @ fy.T                          # int P0(x, y) K_P(x, y') dx
    dd = k0_yy + kp_yy - cross - cross.T
    dd = 0.5 * (dd + dd.T) * np.outer(sy, sy)
    top = float(np.linalg.eigvalsh(dd).max())
    return math.sqrt(max(top, 0.0))


def check_perturbation(P: FiniteRankProjection, P0, J, K0: Optional[ResolventK0] = None,
                       order: int = 60) -> PerturbationBound:
    """Evaluate the closeness hypothesis and the constant M without raising."""
    a, b = (float(v) for v in J)
    if K0 is None:
        K0 = fredholm_resolvent_K0(P0, (a, b), order)
    k0 = K0.op_norm
    if b == a:
        return PerturbationBound(0.0, 1.0 / (4.0 * (1.0 + k0)), True, k0, 0.0, 0.0, 0.0)
    lhs = _restricted_difference_op_norm(P, P0, (a, b), order)
    rhs = 1.0 / (4.0 * (1.0 + k0))
    y, wy = gauss_legendre(a, b, order)
    if getattr(P0, "features", None) is not None:
        hs0 = float(np.sum(np.sum(P0.features(y) ** 2, axis=1) * wy))
    else:
        hs0 = float(np.sum(np.asarray(P0(y, y), dtype=float) * wy))
    hsP = float(np.trace(P.gram(a, b)))
    M = (1.0 + k0) ** 2 * (hs0 + hsP)
    return PerturbationBound(lhs, rhs, lhs <= rhs, k0, hs0, hsP, M)


def perturbation_bound_M(P: FiniteRankProjection, P0, J, K0: Optional[ResolventK0] = None,
                         order: int = 60) -> float:
    """M = (1 + ||K_0||)^2 (||1_J P0||_HS^2 + ||1_J P||_HS^2); raises if the hypothesis fails."""
    rep = check_perturbation(P, P0, J, K0, order)
    if not rep.holds:
        raise HypothesisError(
            f"||(P0 - P) 1_J||_op = {rep.hyp_lhs:.4g} exceeds 1/(4(1+||K0||)) = {rep.hyp_rhs:.4g}"
        )
    return rep.M
