"""Random spectra: GUE (dense and tridiagonal) and a four-moment-matched Wigner ensemble.

Every sample is a pure function of a seed triple (seed, worker, index), fed
through a SeedSequence into a counter-based Philox generator, so batches can
be split across workers without changing any draw.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .kernels import classical_location, semicircle_density

__all__ = [
    "EnsembleSpec",
    "SpectrumSample",
    "RescaledContext",
    "rng_stream",
    "gue_matrix",
    "matched_wigner_matrix",
    "gue_tridiagonal",
    "sample_gue",
    "sample_matched_wigner",
    "sample_spectrum",
    "rescale",
    "single_gap",
    "averaged_gap_stat",
    "sturm_count",
    "gap_samples",
    "eigenvalue_pair_samples",
    "count_below_samples",
    "write_spectra_csv",
    "read_spectra_csv",
]

KINDS = ("gue", "matched_wigner")

# three-point laws with the Gaussian second and fourth moments
_OFFDIAG_ATOM = math.sqrt(1.5)   # each of Re, Im: variance 1/2, fourth moment 3/4
_DIAG_ATOM = math.sqrt(3.0)      # variance 1, fourth moment 3


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    backend: str = "dense"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.backend not in ("dense", "tridiagonal"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.kind == "matched_wigner" and self.backend != "dense":
            raise ValueError("the matched ensemble has no tridiagonal model")

    @staticmethod
    def entry_moment(kind: str, a: int, b: int, diagonal: bool = False) -> float:
        """Exact E (Re xi)^a (Im xi)^b of one entry."""
        if diagonal:
            if b:
                return 0.0
            if kind == "gue":
                return _gauss_moment(a, 1.0)
            return _three_point_moment(a, _DIAG_ATOM)
        if kind == "gue":
            return _gauss_moment(a, 0.5) * _gauss_moment(b, 0.5)
        return _three_point_moment(a, _OFFDIAG_ATOM) * _three_point_moment(b, _OFFDIAG_ATOM)


def _gauss_moment(k: int, var: float) -> float:
    if k % 2:
        return 0.0
    return var ** (k // 2) * math.prod(range(k - 1, 0, -2))


def _three_point_moment(k: int, atom: float) -> float:
    if k == 0:
        return 1.0
    if k % 2:
        return 0.0
    return atom**k / 3.0


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    eigenvalues: np.ndarray
    seed: tuple
    ensemble: str

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class RescaledContext:
    u: float
    n: int
    scale: float   # sqrt(n) rho_sc(u)
    shift: float   # u sqrt(n)


def rng_stream(seed: int, worker: int = 0, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, worker, index])))


def _three_point(rng, atom: float, size) -> np.ndarray:
    u = rng.integers(0, 6, size=size)
    return np.where(u == 0, -atom, np.where(u == 1, atom, 0.0))


def gue_matrix(n: int, rng) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def matched_wigner_matrix(n: int, rng) -> np.ndarray:
    re = _three_point(rng, _OFFDIAG_ATOM, (n, n))
    im = _three_point(rng, _OFFDIAG_ATOM, (n, n))
    h = np.triu(re + 1j * im, 1)
    h = h + h.conj().T
    h[np.diag_indices(n)] = _three_point(rng, _DIAG_ATOM, n)
    return h


def gue_tridiagonal(n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric tridiagonal model with the GUE eigenvalue law (beta = 2).

    Diagonal N(0, 1); off-diagonal chi_{2k}/sqrt(2) for k = n-1, ..., 1.
    """
    d = rng.standard_normal(n)
    dof = 2.0 * np.arange(n - 1, 0, -1)
    e = np.sqrt(rng.chisquare(dof) / 2.0) if n > 1 else np.empty(0)
    return d, e


def sample_gue(n: int, seed: int, backend: str = "tridiagonal", worker: int = 0,
               index: int = 0) -> SpectrumSample:
    rng = rng_stream(seed, worker, index)
    if backend == "dense":
        lam = np.linalg.eigvalsh(gue_matrix(n, rng))
    elif backend == "tridiagonal":
        d, e = gue_tridiagonal(n, rng)
        lam = eigvalsh_tridiagonal(d, e) if n > 1 else d.copy()
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return SpectrumSample(np.sort(lam), (seed, worker, index), f"gue/{backend}")


def sample_matched_wigner(n: int, seed: int, worker: int = 0, index: int = 0) -> SpectrumSample:
    rng = rng_stream(seed, worker, index)
    lam = np.linalg.eigvalsh(matched_wigner_matrix(n, rng))
    return SpectrumSample(np.sort(lam), (seed, worker, index), "matched_wigner")


def sample_spectrum(spec: EnsembleSpec, seed: int, worker: int = 0, index: int = 0) -> SpectrumSample:
    if spec.kind == "gue":
        return sample_gue(spec.n, seed, spec.backend, worker, index)
    return sample_matched_wigner(spec.n, seed, worker, index)


# ---------------------------------------------------------------------------
# statistics of one spectrum
# ---------------------------------------------------------------------------

def _bulk(u: float) -> float:
    if not -2.0 < u < 2.0:
        raise ValueError(f"energy u={u} is not in the bulk")
    return float(u)


def rescale(sample: SpectrumSample, u: float):
    """Map eigenvalues to (lambda - u sqrt(n)) sqrt(n) rho_sc(u): unit mean spacing near u."""
    u = _bulk(u)
    n = sample.n
    ctx = RescaledContext(u, n, math.sqrt(n) * float(semicircle_density(u)), u * math.sqrt(n))
    return (sample.eigenvalues - ctx.shift) * ctx.scale, ctx


def single_gap(sample: SpectrumSample, i: int, u: Optional[float] = None) -> float:
    """Normalised gap (lambda_{i+1} - lambda_i) sqrt(n) rho_sc(u), i 1-based."""
    n = sample.n
    if not 1 <= i <= n - 1:
        raise IndexError(f"gap index {i} outside 1..{n - 1}")
    if u is None:
        u = classical_location(i, n)
    lam = sample.eigenvalues
    return float((lam[i] - lam[i - 1]) * math.sqrt(n) * semicircle_density(_bulk(u)))


def averaged_gap_stat(sample: SpectrumSample, s: float, t_n: float, u: float = 0.0) -> float:
    """Fraction statistic S(s, t_n, u): gaps below s mean spacings, started within
    t_n mean spacings of u sqrt(n), divided by 2 t_n."""
    n = sample.n
    scale = math.sqrt(n) * float(semicircle_density(_bulk(u)))
    lam = sample.eigenvalues
    gaps = np.diff(lam)
    near = np.abs(lam[:-1] - u * math.sqrt(n)) <= t_n / scale
    small = gaps <= s / scale
    return float(np.count_nonzero(near & small)) / (2.0 * t_n)


def sturm_count(d: np.ndarray, e: np.ndarray, x: float) -> np.ndarray:
    """Number of eigenvalues below x of symmetric tridiagonals (batched over leading axes)."""
    d = np.atleast_2d(d)
    e = np.atleast_2d(e)
    q = d[:, 0] - x
    count = (q < 0).astype(int)
    tiny = np.finfo(float).tiny
    for k in range(1, d.shape[1]):
        q = np.where(q == 0.0, tiny, q)
        q = d[:, k] - x - e[:, k - 1] ** 2 / q
        count += q < 0
    return count


# ---------------------------------------------------------------------------
# batched Monte Carlo helpers (one seed triple per sample)
# ---------------------------------------------------------------------------

def eigenvalue_pair_samples(kind: str, n: int, i: int, count: int, seed: int,
                            backend: str = "tridiagonal", worker: int = 0,
                            start: int = 0) -> np.ndarray:
    """(lambda_i, lambda_{i+1}) for ``count`` independent draws, shape (count, 2)."""
    if not 1 <= i <= n - 1:
        raise IndexError(f"gap index {i} outside 1..{n - 1}")
    out = np.empty((count, 2))
    for k in range(count):
        rng = rng_stream(seed, worker, start + k)
        if kind == "gue" and backend == "tridiagonal":
            d, e = gue_tridiagonal(n, rng)
            out[k] = eigvalsh_tridiagonal(d, e, select="i", select_range=(i - 1, i))
            continue
        if kind == "gue":
            lam = np.linalg.eigvalsh(gue_matrix(n, rng))
        elif kind == "matched_wigner":
            lam = np.linalg.eigvalsh(matched_wigner_matrix(n, rng))
        else:
            raise ValueError(f"unknown ensemble {kind!r}")
        out[k] = lam[i - 1:i + 1]
    return out


def gap_samples(kind: str, n: int, i: int, count: int, seed: int,
                backend: str = "tridiagonal", u: Optional[float] = None, **kw) -> np.ndarray:
    """Normalised single gaps X at index i for ``count`` independent draws."""
    if u is None:
        u = classical_location(i, n)
    pairs = eigenvalue_pair_samples(kind, n, i, count, seed, backend, **kw)
    return (pairs[:, 1] - pairs[:, 0]) * math.sqrt(n) * float(semicircle_density(_bulk(u)))


def count_below_samples(n: int, energy, count: int, seed: int, worker: int = 0,
                        start: int = 0, batch: int = 2000) -> np.ndarray:
    """GUE counts N_(-inf, E)(M_n) via Sturm sequences on the tridiagonal model.

    ``energy`` may be a scalar (result shape (count,)) or a sequence of k
    energies evaluated on the same draws (result shape (count, k)).
    """
    energies = np.atleast_1d(np.asarray(energy, dtype=float))
    out = np.empty((count, energies.size), dtype=int)
    for b0 in range(0, count, batch):
        b1 = min(count, b0 + batch)
        ds, es = [], []
        for k in range(b0, b1):
            d, e = gue_tridiagonal(n, rng_stream(seed, worker, start + k))
            ds.append(d)
            es.append(e)
        d = np.array(ds)
        e = np.array(es).reshape(b1 - b0, n - 1)
        for j, x in enumerate(energies):
            out[b0:b1, j] = sturm_count(d, e, x)
    return out[:, 0] if np.ndim(energy) == 0 else out


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def write_spectra_csv(path, samples) -> Path:
    """Rows: seed, n, ensemble, lambda_1..lambda_n (seed written as s:w:i)."""
    path = Path(path)
    samples = list(samples)
    n = max((s.n for s in samples), default=0)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "n", "ensemble"] + [f"lambda_{k}" for k in range(1, n + 1)])
        for s in samples:
            w.writerow([":".join(str(v) for v in s.seed), s.n, s.ensemble]
                       + [repr(float(v)) for v in s.eigenvalues])
    return path


def read_spectra_csv(path) -> list:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))[1:]
    out = []
    for r in rows:
        seed = tuple(int(v) for v in r[0].split(":"))
        n = int(r[1])
        out.append(SpectrumSample(np.array([float(v) for v in r[3:3 + n]]), seed, r[2]))
    return out
