"""Laws of the counting function #(Sigma n I) for projection determinantal processes.

The count in I is a sum of independent Bernoulli variables whose parameters
are the eigenvalues of 1_I P 1_I. For a finite-rank P these coincide with the
eigenvalues of the n x n Gram matrix of the basis over I, which is how they
are computed for FiniteRankProjection inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .operators import (
    CLAMP_TOL,
    DegenerateConditioningError,
    FiniteRankProjection,
    LEAK_TOL,
    DiscretizationError,
    condition_on_empty,
    discretize,
)

__all__ = [
    "CountingLaw",
    "counting_law",
    "poisson_binomial_pmf",
    "hole_probability",
    "gaussian_pmf_approx",
    "conditional_counting_stats",
    "conditional_law",
    "joint_count_probability",
]


@dataclass(frozen=True, eq=False)
class CountingLaw:
    """Bernoulli parameters of a counting variable.

    ``dropped`` is the total mass of parameters below the clamp tolerance
    that were discarded; it bounds the resulting bias in ``mu``.
    """

    lambdas: np.ndarray
    dropped: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        if lam.size and (lam.min() <= 0.0 or lam.max() > 1.0):
            raise ValueError("Bernoulli parameters must lie in (0, 1]")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def from_parameters(cls, lambdas) -> "CountingLaw":
        lam = np.clip(np.asarray(lambdas, dtype=float).ravel(), 0.0, 1.0)
        small = lam <= CLAMP_TOL
        return cls(lam[~small], float(lam[small].sum()))

    @property
    def mu(self) -> float:
        return float(self.lambdas.sum())

    @property
    def sigma2(self) -> float:
        lam = self.lambdas
        return float(np.sum(lam * (1.0 - lam)))

    def __len__(self) -> int:
        return self.lambdas.size

    def pmf(self) -> np.ndarray:
        """P(count = m) for m = 0..len(lambdas), by direct convolution."""
        p = np.zeros(self.lambdas.size + 1)
        p[0] = 1.0
        for k, lam in enumerate(self.lambdas, start=1):
            p[1:k + 1] = p[1:k + 1] * (1.0 - lam) + p[:k] * lam
            p[0] *= 1.0 - lam
        return p


def _check_leak(lam: np.ndarray) -> None:
    if lam.size and (lam.min() < -LEAK_TOL or lam.max() > 1.0 + LEAK_TOL):
        raise DiscretizationError(
            f"Bernoulli parameters outside [0, 1]: min {lam.min():.3e}, max {lam.max():.3e}"
        )


def counting_law(P, interval, order: int = 200) -> CountingLaw:
    """Counting law of the process with kernel P in ``interval``.

    Finite-rank projections use the basis Gram matrix (half-infinite ends
    are cut at the edge of the basis support); other kernels need a compact
    interval and go through the Nystrom matrix of 1_I P 1_I.
    """
    a, b = (float(v) for v in interval)
    if b <= a:
        return CountingLaw(np.empty(0))
    if isinstance(P, FiniteRankProjection):
        lam = np.linalg.eigvalsh(P.gram(a, b))
    else:
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("kernels without a finite basis need a compact interval")
        lam = np.linalg.eigvalsh(discretize(P, (a, b), order).matrix)
    _check_leak(lam)
    return CountingLaw.from_parameters(lam)


def poisson_binomial_pmf(law: CountingLaw, m: int) -> float:
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > len(law):
        return 0.0
    return float(law.pmf()[m])


def hole_probability(law: CountingLaw) -> float:
    """P(count = 0) = prod(1 - lambda_i)."""
    return float(np.prod(1.0 - law.lambdas))


def gaussian_pmf_approx(mu: float, sigma2: float, m) -> tuple:
    """Gaussian density at m and the error budget sigma^-1.7 (constant taken as 1)."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    m = np.asarray(m, dtype=float)
    approx = np.exp(-((m - mu) ** 2) / (2.0 * sigma2)) / (math.sqrt(2.0 * math.pi) * sigma)
    approx = approx[()] if approx.ndim == 0 else approx
    return approx, sigma ** -1.7


def conditional_law(V: FiniteRankProjection, J, I) -> CountingLaw:
    """Law of #(Sigma n I) given no point in J (I and J disjoint).

    Solves the generalised problem G_I v = lambda (1 - G_J) v, which has the
    spectrum of the conditioned projection restricted to I.
    """
    a, b = (float(v) for v in J)
    lo, hi = (float(v) for v in I)
    if b <= a:
        return counting_law(V, (lo, hi))
    if max(lo, a) < min(hi, b):
        raise ValueError("I and J must be disjoint")
    gJ = V.gram(a, b)
    gI = V.gram(lo, hi)
    comp = np.eye(V.rank) - gJ
    if np.linalg.eigvalsh(comp).min() <= 1e-10:
        raise DegenerateConditioningError("an element of V is numerically supported in J")
    lam = eigh(gI, comp, eigvals_only=True)
    _check_leak(lam)
    return CountingLaw.from_parameters(lam)


def conditional_counting_stats(V: FiniteRankProjection, J, I) -> tuple[float, float]:
    """(mu~, sigma~^2) = (tr(P~ 1_I), tr(P~ 1_{I^c} P~ 1_I)) for P~ the conditioned projection."""
    lo, hi = (float(v) for v in I)
    a, b = (float(v) for v in J)
    if max(lo, a) < min(hi, b):
        raise ValueError("I and J must be disjoint")
    Pt = condition_on_empty(V, (a, b))
    g = Pt.gram(lo, hi)
    mu = float(np.trace(g))
    return mu, float(mu - np.sum(g * g))


def joint_count_probability(V: FiniteRankProjection, x: float, i: int, s: float) -> float:
    """P(#(-inf, x) = i and #[x, x + s] = 0), exact up to quadrature."""
    if i < 0 or i > V.rank:
        return 0.0
    if s < 0:
        raise ValueError("s must be >= 0")
    left = (-math.inf, float(x))
    if s == 0:
        return poisson_binomial_pmf(counting_law(V, left), i)
    J = (float(x), float(x) + float(s))
    hole = hole_probability(counting_law(V, J))
    cond = conditional_law(V, J, left)
    return hole * poisson_binomial_pmf(cond, i)
