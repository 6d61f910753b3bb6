import csv
import json
import subprocess
import sys

import pytest

from singlegap.harness.cli import build_parser, main
from singlegap.harness.config import EXPERIMENTS


def _run(argv):
    return main(argv)


def test_every_subcommand_is_registered():
    parser = build_parser()
    for name in EXPERIMENTS:
        args = parser.parse_args([name, "--n", "20"])
        assert args.experiment == name and args.n == (20,)


def test_single_gap_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = _run(["single-gap", "--n", "20,30", "--samples", "12", "--seed", "3", "--ensemble", "gue",
                 "--s-grid", "0.5,1", "--out", str(out)])
    assert code == 0
    status = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert status["status"] == "ok" and status["cells"] == 2
    assert {p.name for p in out.iterdir()} == {"report.csv", "report.json", "gaudin_table.csv", "config.txt"}
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert [r["n"] for r in rows] == ["20", "30"]
    assert all(r["seed"] == "3" and r["samples"] == "12" for r in rows)
    assert "seed = 3" in (out / "config.txt").read_text()


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "exp.txt"
    conf.write_text("n = 20\nsamples = 4\nseed = 9\nx = 0.0, 0.5\n")
    out = tmp_path / "g"
    assert _run(["gustavsson", "--config", str(conf), "--samples", "6", "--out", str(out)]) == 0
    data = json.loads((out / "report.json").read_text())
    assert data["config"]["samples"] == 6 and data["config"]["seed"] == 9
    assert len(data["cells"]) == 2


def test_quad_order_flag(tmp_path):
    out = tmp_path / "q"
    assert _run(["independence", "--n", "20", "--s-grid", "0.5", "--quad-order", "30", "--out", str(out)]) == 0
    data = json.loads((out / "report.json").read_text())
    assert data["config"]["quad_order"] == 30


def test_config_error_exit_code(tmp_path, capsys):
    out = tmp_path / "bad"
    code = _run(["single-gap", "--n", "4", "--out", str(out)])
    assert code == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["status"] == "error" and record["type"] == "ConfigError"
    assert json.loads((out / "error.json").read_text()) == record


def test_bad_flag_and_subcommand(capsys):
    assert _run(["no-such-experiment"]) == 2
    assert _run(["single-gap", "--samples", "lots"]) == 2
    err = capsys.readouterr().err
    assert all(json.loads(line)["status"] == "error" for line in err.strip().splitlines())


def test_runtime_error_exit_code(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    conf = tmp_path / "c.txt"
    conf.write_text(f"gaudin_table = {missing}\n")
    code = _run(["single-gap", "--config", str(conf), "--n", "20", "--samples", "2", "--out", str(tmp_path / "o")])
    assert code == 1
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["type"] == "FileNotFoundError" and "traceback" in record


def test_console_script_module_entry(tmp_path):
    out = tmp_path / "k"
    proc = subprocess.run([sys.executable, "-m", "singlegap.harness.cli", "kernel-convergence", "--n", "20,30",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "report.csv").exists()


def test_gaudin_table_subcommand(tmp_path):
    out = tmp_path / "t"
    assert _run(["gaudin-table", "--s-grid", "0.5,1,3", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert len(rows) == 3
    assert all(float(r["abs_diff"]) <= 1e-5 for r in rows)
    table = list(csv.DictReader((out / "gaudin_table.csv").open()))
    assert table[0]["s"] == "0.0" and table[0]["route"] == "fredholm"


def test_help_exits_cleanly(capsys):
    assert _run(["--help"]) == 0
