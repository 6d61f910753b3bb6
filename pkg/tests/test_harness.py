import csv
import dataclasses
import json
import math

import numpy as np
import pytest

from singlegap.gaudin import sine_gap_determinant
from singlegap.harness import (
    COLUMNS,
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    load_config,
    load_report,
    run_averaged_gap,
    run_experiment,
    run_gap_at_energy,
    run_gustavsson,
    run_independence,
    run_kernel_convergence,
    run_single_gap,
    write_outputs,
)


def cfg(**kw):
    return ExperimentConfig(**kw).validate()


# --- configuration -----------------------------------------------------------------------

def test_config_validation():
    bad = [dict(n=(4,)), dict(samples=0), dict(s_grid=(0.0,)), dict(s_grid=()), dict(ensemble="goe"),
           dict(u=2.0), dict(i=100, n=(50,)), dict(experiment="nope"), dict(quad_order=2),
           dict(experiment="independence", n=(5000,)), dict(jobs=0)]
    for kw in bad:
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw).validate()


def test_config_text_roundtrip(tmp_path):
    c = cfg(experiment="gustavsson", n=(100, 200), samples=7, u=0.25, x=(0.0, 1.5), quad_order=40)
    back = ExperimentConfig.from_text(c.to_text())
    assert back == c
    path = c.write(tmp_path / "c.txt")
    assert load_config(path) == c
    assert load_config(path, samples=9).samples == 9


def test_config_parse_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("n 100")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("colour = red")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("samples = many")
    c = ExperimentConfig.from_text("# comment\nn = 50, 60  # trailing\ns-grid = 1\n")
    assert c.n == (50, 60) and c.s_grid == (1.0,)


def test_config_hash_changes_with_every_field():
    base = ExperimentConfig()
    h0 = base.config_hash()
    alt = dict(experiment="gustavsson", n=(64,), samples=3, seed=1, i=5, u=0.1, x=(0.5,), s_grid=(0.7,),
               ensemble="gue", backend="dense", t_exponents=(0.9,), quad_order=50, L_grid=(10.0,),
               y_points=3, exact=False, max_exact_n=300, jobs=2, gaudin_route="painleve",
               gaudin_table="t.csv", out="o")
    assert set(alt) == {f.name for f in dataclasses.fields(ExperimentConfig)}
    for k, v in alt.items():
        assert base.replace(**{k: v}).config_hash() != h0, k
    assert ExperimentConfig().config_hash() == h0


def test_defaults_t_n_and_clt_scale():
    c = ExperimentConfig()
    assert c.t_n(1000) == pytest.approx(math.log(1000) ** 0.6)
    assert c.clt_scale(1000) == pytest.approx(math.sqrt(math.log(1000) / (2 * math.pi**2)))
    assert c.index_for(101) == 50


# --- reports --------------------------------------------------------------------------------

def test_empty_report_header_only(tmp_path):
    rep = ExperimentReport("single-gap", {})
    paths = emit_report(rep, tmp_path)
    rows = list(csv.reader(paths["csv"].open()))
    assert rows == [COLUMNS["single-gap"]]


def test_report_cells_need_provenance():
    rep = ExperimentReport("single-gap", {})
    with pytest.raises(ValueError):
        rep.add(n=10, samples=5)


def test_json_roundtrip_bit_exact(tmp_path):
    rep = run_single_gap(cfg(n=(20,), samples=40, ensemble="gue"))
    rep.cells[0]["odd"] = 0.1 + 0.2
    rep.cells[0]["missing"] = float("nan")
    paths = emit_report(rep, tmp_path)
    back = load_report(paths["json"])
    for a, b in zip(rep.cells, back.cells):
        for k in a:
            if isinstance(a[k], float) and math.isnan(a[k]):
                assert math.isnan(b[k])
            else:
                assert a[k] == b[k], k
    np.testing.assert_array_equal(np.array(back.arrays["x/gue/20"]), rep.arrays["x/gue/20"])
    assert back.provenance == json.loads(json.dumps(rep.provenance))


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(ExperimentReport("single-gap", {}), tmp_path, formats=("xml",))


# --- single gap -------------------------------------------------------------------------------

def test_single_gap_degenerate_config():
    rep = run_single_gap(cfg(n=(30,), samples=1, ensemble="gue"))
    assert len(rep.cells) == 1
    assert len(rep.arrays["x/gue/30"]) == 1
    assert rep.cells[0]["samples"] == 1 and rep.cells[0]["seed"] == 0


def test_single_gap_runs_both_ensembles():
    rep = run_single_gap(cfg(n=(24,), samples=30))
    assert rep.column("ensemble") == ["gue", "matched_wigner"]
    assert rep.column("backend") == ["tridiagonal", "dense"]


@pytest.mark.property
def test_determinism_and_worker_split():
    c = cfg(n=(40,), samples=24, ensemble="gue")
    a = run_single_gap(c)
    b = run_single_gap(c)
    par = run_single_gap(c.replace(jobs=2))
    np.testing.assert_array_equal(a.arrays["x/gue/40"], b.arrays["x/gue/40"])
    np.testing.assert_array_equal(a.arrays["x/gue/40"], par.arrays["x/gue/40"])
    assert a.cells == b.cells


# --- averaged gap ----------------------------------------------------------------------------

def test_averaged_gap_single_cell():
    rep = run_averaged_gap(cfg(experiment="averaged-gap", n=(50,), samples=1, s_grid=(1.0,), ensemble="gue"))
    assert len(rep.cells) == 1


def test_averaged_gap_accuracy_and_window_stability():
    rep = run_averaged_gap(cfg(experiment="averaged-gap", n=(400,), samples=500, s_grid=(0.5, 1.0, 2.0),
                               ensemble="gue", t_exponents=(0.6, 0.9), seed=3))
    for c in rep.cells:
        assert c["abs_err"] <= 0.05
    by = {(c["t_exponent"], c["s"]): c["mean_S"] for c in rep.cells}
    for s in (0.5, 1.0, 2.0):
        assert abs(by[(0.6, s)] - by[(0.9, s)]) <= 0.02


# --- Gustavsson -------------------------------------------------------------------------------

def test_gustavsson_mean_and_trend(gustavsson_report):
    cells = {c["n"]: c for c in gustavsson_report.cells}
    for c in cells.values():
        assert abs(c["mean_count"] - c["i"]) <= 2
        # Monte Carlo variance within 3 standard errors of the exact value
        se = c["var_exact"] * math.sqrt(2 / (c["samples"] - 1))
        assert abs(c["var_count"] - c["var_exact"]) <= 3 * se + 0.02
    assert cells[1000]["ks_normal"] < cells[200]["ks_normal"]


def test_gustavsson_rejects_matched():
    with pytest.raises(ConfigError):
        run_gustavsson(cfg(experiment="gustavsson", n=(50,), samples=3, ensemble="matched"))


# --- independence --------------------------------------------------------------------------------

def test_independence_exact():
    rep = run_independence(cfg(experiment="independence", n=(50, 100), s_grid=(1.0,)))
    by = {(c["n"], c["s"]): c for c in rep.cells}
    for n in (50, 100):
        zero = by[(n, 0.0)]
        assert zero["joint"] == zero["marginal"]
        assert zero["diff"] == 0.0
    assert abs(by[(100, 1.0)]["diff"]) < abs(by[(50, 1.0)]["diff"])
    for c in rep.cells:
        assert c["samples"] == 0
        assert abs(c["mu_tilde"] - c["mu"]) <= max(1.0, c["M"])


# --- hole probabilities ---------------------------------------------------------------------------

def test_gap_energy_small_s_and_n200():
    rep = run_gap_at_energy(cfg(experiment="gap-energy", n=(200,), samples=2000, s_grid=(1e-6, 0.5, 1.0),
                                x=(0.0, 1.0), seed=5))
    for c in rep.cells:
        if c["s"] == 1e-6:
            assert c["exact"] == pytest.approx(1, abs=1e-5) and c["sine"] == pytest.approx(1, abs=1e-5)
        else:
            assert c["exact"] >= 0.1
        if c["s"] == 1.0 and c["x"] == 0.0:
            assert abs(c["exact"] - sine_gap_determinant(1.0)) <= 0.03
    # exact-vs-Monte-Carlo coherence
    within = [abs(c["mc_z"]) <= 3 for c in rep.cells if c["s"] > 1e-6]
    assert np.mean(within) >= 0.95


def test_gap_energy_rejects_far_x():
    with pytest.raises(ConfigError):
        run_gap_at_energy(cfg(experiment="gap-energy", n=(50,), samples=2, x=(5.0,)))


# --- kernel convergence ------------------------------------------------------------------------------

def test_kernel_convergence_small_ladder():
    rep = run_kernel_convergence(cfg(experiment="kernel-convergence", n=(50, 100, 200), L_grid=(20.0, 40.0, 80.0)))
    d = rep.column("d_full")
    assert d[0] > d[1] > d[2]
    tails = rep.column("tail_mass")
    assert tails[2] <= 0.1 and tails[0] > tails[1] > tails[2]
    # truncations of a nonnegative integrand grow with L toward the full-line value
    for n, full in zip((50, 100, 200), d):
        trunc = rep.arrays[f"d_truncated/{n}"]["d"]
        assert trunc[0] <= trunc[1] <= trunc[2] <= full + 1e-9


# --- outputs ---------------------------------------------------------------------------------------

def test_write_outputs(tmp_path):
    c = cfg(n=(20,), samples=5, ensemble="gue")
    rep = run_experiment(c)
    paths = write_outputs(rep, c, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["config.txt", "gaudin_table.csv", "report.csv", "report.json"]
    assert load_config(paths["config"]) == c
    assert "total" in rep.provenance["runtime"]
    assert rep.provenance["config_hash"] == c.config_hash()
