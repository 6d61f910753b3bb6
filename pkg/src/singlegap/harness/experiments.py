"""Experiment runners.

Monte Carlo draws are keyed by the seed triple (seed, n, index): the middle
slot names the stream of one n-rung, so a run gives the same numbers however
the sample range is split across worker processes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.linalg import eigvalsh_tridiagonal

from ..counting import (
    conditional_counting_stats,
    counting_law,
    hole_probability,
    joint_count_probability,
    poisson_binomial_pmf,
)
from ..ensembles import (
    averaged_gap_stat,
    count_below_samples,
    gap_samples,
    gue_tridiagonal,
    rng_stream,
    sample_gue,
    sample_matched_wigner,
    sturm_count,
)
from ..gaudin import (
    GapLawTable,
    default_table,
    gap_function_fredholm,
    gap_function_painleve,
    sine_gap_determinant,
)
from ..kernels import classical_location, semicircle_density, sine_kernel_function
from ..operators import (
    PANEL_ORDER,
    check_perturbation,
    composite_rule,
    gauss_legendre,
    rescaled_gue_projection,
)
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport, emit_report, provenance

__all__ = [
    "RUNNERS",
    "gaudin_table_for",
    "run_experiment",
    "run_single_gap",
    "run_averaged_gap",
    "run_gustavsson",
    "run_independence",
    "run_gap_at_energy",
    "run_kernel_convergence",
    "run_gaudin_table",
    "write_outputs",
]

_KIND = {"gue": "gue", "matched": "matched_wigner"}


def _kinds(config: ExperimentConfig) -> list:
    if config.ensemble == "both":
        return ["gue", "matched_wigner"]
    return [_KIND[config.ensemble]]


def _new_report(config: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(config.experiment, config.to_dict(), provenance=provenance(config))


def _energy(config: ExperimentConfig, n: int) -> tuple[int, float]:
    i = config.index_for(n)
    u = config.u if config.u is not None else classical_location(i, n)
    return i, u


def _fan_out(fn, count: int, jobs: int):
    """Evaluate fn(count=..., start=...) over contiguous index chunks and concatenate."""
    if jobs <= 1 or count < 2 * jobs:
        return fn(count=count, start=0)
    bounds = np.linspace(0, count, jobs + 1).astype(int)
    with ProcessPoolExecutor(jobs) as pool:
        futures = [pool.submit(fn, count=int(b - a), start=int(a))
                   for a, b in zip(bounds[:-1], bounds[1:])]
        return np.concatenate([f.result() for f in futures])


_TABLES: dict = {}


def gaudin_table_for(config: ExperimentConfig) -> GapLawTable:
    """Gaudin table per config: a CSV file, the Painleve route, or the Fredholm route."""
    if config.gaudin_table:
        return GapLawTable.from_csv(config.gaudin_table)
    if config.gaudin_route == "painleve":
        key = ("painleve",)
        if key not in _TABLES:
            _TABLES[key] = gap_function_painleve()
        return _TABLES[key]
    if config.quad_order is None:
        return default_table()
    key = ("fredholm", config.quad_order)
    if key not in _TABLES:
        _TABLES[key] = gap_function_fredholm(order=config.quad_order)
    return _TABLES[key]


def _gof(sample: np.ndarray, cdf) -> dict:
    ks = stats.kstest(sample, cdf)
    out = {"ks": float(ks.statistic), "ks_pvalue": float(ks.pvalue)}
    if sample.size >= 2:
        cvm = stats.cramervonmises(sample, cdf)
        out.update(cvm=float(cvm.statistic), cvm_pvalue=float(cvm.pvalue))
    else:
        out.update(cvm=math.nan, cvm_pvalue=math.nan)
    return out


# ---------------------------------------------------------------------------
# single gap
# ---------------------------------------------------------------------------

def run_single_gap(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    table = gaudin_table_for(config)
    F = table.cdf_function()
    rep = _new_report(config)
    for kind in _kinds(config):
        backend = config.backend if kind == "gue" else "dense"
        for n in config.n:
            i, u = _energy(config, n)
            fn = partial(gap_samples, kind, n, i, seed=config.seed, backend=backend, u=u, worker=n)
            x = _fan_out(fn, config.samples, config.jobs)
            gof = _gof(x, F)
            rep.add(n=n, samples=x.size, seed=config.seed, ensemble=kind, backend=backend, i=i,
                    u=u, mean_x=float(x.mean()), var_x=float(x.var()), **gof)
            s = np.asarray(config.s_grid, dtype=float)
            rep.arrays[f"x/{kind}/{n}"] = x
            rep.arrays[f"ecdf/{kind}/{n}"] = {
                "s": s,
                "empirical": np.searchsorted(np.sort(x), s, side="right") / x.size,
                "gaudin": F(s),
            }
    return rep


# ---------------------------------------------------------------------------
# averaged gap
# ---------------------------------------------------------------------------

def _averaged_chunk(kind, n, u, s_grid, t_list, seed, backend, count, start):
    out = np.empty((count, len(t_list), len(s_grid)))
    for k in range(count):
        if kind == "gue":
            smp = sample_gue(n, seed, backend, worker=n, index=start + k)
        else:
            smp = sample_matched_wigner(n, seed, worker=n, index=start + k)
        for a, t in enumerate(t_list):
            for b, s in enumerate(s_grid):
                out[k, a, b] = averaged_gap_stat(smp, s, t, u)
    return out


def run_averaged_gap(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    F = gaudin_table_for(config).cdf_function()
    rep = _new_report(config)
    u = config.u if config.u is not None else 0.0
    for kind in _kinds(config):
        backend = config.backend if kind == "gue" else "dense"
        for n in config.n:
            t_list = [config.t_n(n, a) for a in config.t_exponents]
            if any(not 1.0 < t < n for t in t_list):
                raise ConfigError(f"t_n must satisfy 1 < t_n < n (n={n})")
            fn = partial(_averaged_chunk, kind, n, u, config.s_grid, t_list, config.seed, backend)
            S = _fan_out(fn, config.samples, config.jobs)
            for a, (expo, t) in enumerate(zip(config.t_exponents, t_list)):
                for b, s in enumerate(config.s_grid):
                    col = S[:, a, b]
                    target = float(F(s))
                    se = float(col.std(ddof=1) / math.sqrt(col.size)) if col.size > 1 else math.nan
                    rep.add(n=n, samples=col.size, seed=config.seed, ensemble=kind, u=u,
                            t_exponent=expo, t_n=t, s=s, mean_S=float(col.mean()), se_S=se,
                            target=target, abs_err=abs(float(col.mean()) - target))
    return rep


# ---------------------------------------------------------------------------
# Gustavsson statistics
# ---------------------------------------------------------------------------

def _gustavsson_chunk(n, i, energies, seed, count, start):
    """Rows: lambda_i followed by the counts below each energy."""
    out = np.empty((count, 1 + len(energies)))
    d = np.empty((count, n))
    e = np.empty((count, n - 1))
    for k in range(count):
        d[k], e[k] = gue_tridiagonal(n, rng_stream(seed, n, start + k))
        out[k, 0] = eigvalsh_tridiagonal(d[k], e[k], select="i", select_range=(i - 1, i - 1))[0]
    for j, x in enumerate(energies):
        out[:, 1 + j] = sturm_count(d, e, x)
    return out


def run_gustavsson(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    rep = _new_report(config)
    if config.ensemble == "matched":
        raise ConfigError("the Gustavsson experiment samples GUE only")
    for n in config.n:
        i, u = _energy(config, n)
        scale = math.sqrt(n) * float(semicircle_density(u))
        energies = [u * math.sqrt(n) + x / scale for x in config.x]
        fn = partial(_gustavsson_chunk, n, i, energies, config.seed)
        rows = _fan_out(fn, config.samples, config.jobs)
        lam = rows[:, 0]
        clt = config.clt_scale(n)
        z = (lam - math.sqrt(n) * u) * scale / clt
        gof = _gof(z, "norm")
        rep.arrays[f"z/{n}"] = z
        P = None
        if config.exact and n <= config.max_exact_n:
            P = rescaled_gue_projection(n, u)
        for j, x in enumerate(config.x):
            cnt = rows[:, 1 + j]
            var = float(cnt.var(ddof=1)) if cnt.size > 1 else math.nan
            target = clt**2
            var_exact = counting_law(P, (-math.inf, x)).sigma2 if P is not None else math.nan
            rep.add(n=n, samples=cnt.size, seed=config.seed, i=i, u=u, x=x,
                    mean_count=float(cnt.mean()), mean_shift=float(cnt.mean()) - i - x,
                    var_count=var, var_target=target, var_ratio=var / target,
                    var_exact=var_exact, ks_normal=gof["ks"], ks_pvalue=gof["ks_pvalue"],
                    cvm=gof["cvm"])
    return rep


# ---------------------------------------------------------------------------
# approximate independence (exact, no sampling)
# ---------------------------------------------------------------------------

def run_independence(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    rep = _new_report(config)
    rep.notes.append("exact quadrature computation; samples = 0")
    u = config.u if config.u is not None else 0.0
    sine = sine_kernel_function()
    order = config.quad_order or 60
    for n in config.n:
        i = config.index_for(n)
        P = rescaled_gue_projection(n, u)
        for x in config.x:
            left = counting_law(P, (-math.inf, x))
            marginal = poisson_binomial_pmf(left, i)
            for s in (0.0,) + tuple(config.s_grid):
                J = (x, x + s)
                joint = joint_count_probability(P, x, i, s)
                hole = hole_probability(counting_law(P, J)) if s > 0 else 1.0
                mu_t, sig_t = conditional_counting_stats(P, J, (-math.inf, x))
                bound = check_perturbation(P, sine, J, order=order)
                rep.add(n=n, samples=0, seed=config.seed, i=i, u=u, x=x, s=s, joint=joint,
                        marginal=marginal, hole=hole, product=marginal * hole,
                        diff=joint - marginal * hole, mu=left.mu, mu_tilde=mu_t,
                        sigma2=left.sigma2, sigma2_tilde=sig_t, M=bound.M,
                        hypothesis_holds=bool(bound.holds))
    return rep


# ---------------------------------------------------------------------------
# hole probabilities at an energy
# ---------------------------------------------------------------------------

def run_gap_at_energy(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    rep = _new_report(config)
    u = config.u if config.u is not None else 0.0
    order = config.quad_order or 64
    sine_E = {s: sine_gap_determinant(s, order) for s in config.s_grid}
    for n in config.n:
        t = config.t_n(n)
        bad = [x for x in config.x if abs(x) >= t]
        if bad:
            raise ConfigError(f"|x| must be below t_n = {t:.3f} at n={n}: {bad}")
        P = rescaled_gue_projection(n, u)
        scale = math.sqrt(n) * float(semicircle_density(u))
        cells = [(x, s) for x in config.x for s in config.s_grid]
        edges = []
        for x, s in cells:
            edges += [u * math.sqrt(n) + x / scale, u * math.sqrt(n) + (x + s) / scale]
        fn = partial(count_below_samples, n, edges, seed=config.seed, worker=n)
        counts = _fan_out(fn, config.samples, config.jobs)
        for k, (x, s) in enumerate(cells):
            exact = hole_probability(counting_law(P, (x, x + s)))
            empty = counts[:, 2 * k + 1] == counts[:, 2 * k]
            mc = float(empty.mean())
            se = math.sqrt(max(exact * (1.0 - exact), 1e-300) / empty.size)
            rep.add(n=n, samples=empty.size, seed=config.seed, u=u, x=x, s=s, t_n=t,
                    exact=exact, sine=sine_E[s], abs_diff=abs(exact - sine_E[s]), mc=mc,
                    mc_se=se, mc_z=(mc - exact) / se)
    return rep


# ---------------------------------------------------------------------------
# kernel convergence
# ---------------------------------------------------------------------------

def _tail_mass(P, i: int, t: float, width: float = 8.0, panel: float = 0.5) -> float:
    """int_{|x| >= t} P(N_(-inf, x) = i) dx by composite Gauss-Legendre on [t, t + width]
    and its mirror image; Gram matrices are accumulated panel by panel."""
    total = 0.0
    for lo, hi in ((t, t + width), (-t - width, -t)):
        xs, ws = composite_rule(lo, hi, panel, 6)
        g = P.gram(-math.inf, xs[0])
        prev = xs[0]
        for x, w in zip(xs, ws):
            if x > prev:
                g = g + P.gram(prev, x)
                prev = x
            lam = np.clip(np.linalg.eigvalsh(g), 0.0, 1.0)
            total += w * _pmf_at(lam, i)
    return float(total)


def _pmf_at(lam: np.ndarray, m: int) -> float:
    lam = lam[lam > 1e-12]
    if m > lam.size:
        return 0.0
    p = np.zeros(m + 1)
    p[0] = 1.0
    for q in lam:
        p[1:] = p[1:] * (1.0 - q) + p[:-1] * q
        p[0] *= 1.0 - q
    return float(p[m])


def kernel_distance(P, y_points: int = 11, L_grid=()) -> tuple[float, list]:
    """sup_y int |K_sine(x, y) - K_n(x, y)|^2 dx over y in [0, 1].

    The full-line value uses int K_sine(x, y)^2 dx = 1 and the reproducing
    property of K_n, leaving only the cross term to integrate over the
    support of K_n. Truncated values on [-L, L] are returned for each L.
    """
    ys = np.linspace(0.0, 1.0, y_points)
    fy = P.features(ys)
    x, w = P.nodes()
    kx = P.features(x) @ fy.T
    ks = np.sinc(x[:, None] - ys[None, :])
    cross = np.sum(ks * kx * w[:, None], axis=0)
    full = float(np.max(1.0 + np.sum(fy * fy, axis=1) - 2.0 * cross))
    truncated = []
    for L in L_grid:
        xl, wl = composite_rule(-L, L, 0.5, PANEL_ORDER)
        diff = P.features(xl) @ fy.T - np.sinc(xl[:, None] - ys[None, :])
        truncated.append(float(np.max(np.sum(diff * diff * wl[:, None], axis=0))))
    return full, truncated


def run_kernel_convergence(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    rep = _new_report(config)
    rep.notes.append("exact quadrature computation; samples = 0")
    u = config.u if config.u is not None else 0.0
    for n in config.n:
        P = rescaled_gue_projection(n, u)
        full, trunc = kernel_distance(P, config.y_points, config.L_grid)
        t = config.t_n(n)
        tail = _tail_mass(P, config.index_for(n), t) if config.exact else math.nan
        rep.arrays[f"d_truncated/{n}"] = {"L": list(config.L_grid), "d": trunc}
        rep.add(n=n, samples=0, seed=config.seed, u=u, d_full=full,
                d_truncated=trunc[-1] if trunc else math.nan,
                L=config.L_grid[-1] if config.L_grid else math.nan, tail_mass=tail, t_n=t)
    return rep


# ---------------------------------------------------------------------------
# Gaudin table
# ---------------------------------------------------------------------------

def run_gaudin_table(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    rep = _new_report(config)
    t0 = time.perf_counter()
    fred = gap_function_fredholm(order=config.quad_order)
    t1 = time.perf_counter()
    pain = gap_function_painleve()
    t2 = time.perf_counter()
    rep.provenance["runtime"] = {"fredholm": t1 - t0, "painleve": t2 - t1}
    rep.provenance["diagnostics"] = {"fredholm": fred.diagnostics, "painleve": pain.diagnostics}
    main = pain if config.gaudin_route == "painleve" else fred
    for s in config.s_grid:
        k = int(round(s / fred.step))
        if not 0 <= k < fred.s.size or abs(fred.s[k] - s) > 1e-9:
            raise ConfigError(f"s={s} is not a node of the table grid")
        rep.add(n=0, samples=0, seed=config.seed, s=s, E_fredholm=float(fred.E[k]),
                E_painleve=float(pain.E[k]), abs_diff=abs(float(fred.E[k] - pain.E[k])),
                cdf=float(main.cdf[k]), p=float(main.p[k]))
    rep.arrays["normalization"] = {"fredholm": fred.normalization(), "painleve": pain.normalization()}
    rep.arrays["mean"] = {"fredholm": fred.mean(), "painleve": pain.mean()}
    _TABLES[(config.gaudin_route, "built")] = main
    return rep


RUNNERS = {
    "single-gap": run_single_gap,
    "averaged-gap": run_averaged_gap,
    "gustavsson": run_gustavsson,
    "independence": run_independence,
    "gap-energy": run_gap_at_energy,
    "kernel-convergence": run_kernel_convergence,
    "gaudin-table": run_gaudin_table,
}

_USES_TABLE = {"single-gap", "averaged-gap", "gaudin-table"}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    t0 = time.perf_counter()
    rep = RUNNERS[config.experiment](config)
    rep.provenance.setdefault("runtime", {})
    if isinstance(rep.provenance["runtime"], dict):
        rep.provenance["runtime"]["total"] = time.perf_counter() - t0
    return rep


def write_outputs(report: ExperimentReport, config: ExperimentConfig, out_dir) -> dict:
    """report.csv, report.json, config.txt and (where used) gaudin_table.csv."""
    out = Path(out_dir)
    paths = emit_report(report, out)
    paths["config"] = config.write(out / "config.txt")
    if config.experiment in _USES_TABLE:
        if config.experiment == "gaudin-table":
            table = _TABLES.get((config.gaudin_route, "built")) or gaudin_table_for(config)
        else:
            table = gaudin_table_for(config)
        paths["gaudin_table"] = table.to_csv(out / "gaudin_table.csv")
    return paths
