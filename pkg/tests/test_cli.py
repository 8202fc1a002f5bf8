import json
import shutil
import subprocess

import pytest

from varexp.harness.cli import main

LAT = {"domain": {"kind": "box", "lower": [-1, -1], "upper": [1, 1], "resolution": 32},
       "exponent": {"family": "bump", "p0": 2.0, "b": 0.5, "x0": [0, 0]},
       "field": {"family": "indicator_ball", "radius": 0.5}, "alpha": 1.0,
       "points": [[0.01, 0.02], [0.7, 0.1]]}
RAD = {"domain": {"kind": "radial", "dimension": 3, "r_min": 1e-4, "r_max": 1.0,
                  "cells_per_decade": 16},
       "exponent": {"family": "constant", "value": 2.0},
       "field": {"family": "power", "exponent": 1.5}, "atoms": [{"location": [0], "mass": 1.0}],
       "alpha": 1.0, "p": 2.0, "R": 2.0, "points": [0.1, 0.5]}


def _cfg(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_help_and_usage_errors(capsys, tmp_path):
    assert _run(["--help"], capsys)[0] == 0
    assert _run(["frobnicate"], capsys)[0] == 64
    assert _run([], capsys)[0] == 64
    assert _run(["norm"], capsys)[0] == 64
    assert _run(["norm", "--config", str(tmp_path / "missing.json")], capsys)[0] == 64
    bad = _cfg(tmp_path, {"domain": {"kind": "box"}})
    code, io = _run(["norm", "--config", bad], capsys)
    assert code == 64 and "error" in io.err
    (tmp_path / "junk.json").write_text("{not json")
    assert _run(["norm", "--config", str(tmp_path / "junk.json")], capsys)[0] == 64
    assert _run(["check", "no-such-check"], capsys)[0] == 64
    assert _run(["suite", "--only", "tail-kernel,nope"], capsys)[0] == 64


def test_norm_stdout_and_out_dir(capsys, tmp_path):
    code, io = _run(["norm", "--config", _cfg(tmp_path, LAT)], capsys)
    out = json.loads(io.out)
    assert code == 0 and out["sandwich"] and out["value"] > 0
    assert _run(["norm", "--config", _cfg(tmp_path, LAT), "--out", str(tmp_path / "o")],
                capsys)[0] == 0
    assert json.loads((tmp_path / "o" / "norm.json").read_text()) == out
    assert (tmp_path / "o" / "field.csv").exists()


def test_weak_norm_writes_level_scan(capsys, tmp_path):
    code, _ = _run(["weak-norm", "--config", _cfg(tmp_path, RAD), "--out", str(tmp_path)], capsys)
    assert code == 0
    out = json.loads((tmp_path / "weak-norm.json").read_text())
    assert out["value"] > 0 and (tmp_path / "level-scan.csv").exists()


def test_riesz_points_and_grid(capsys, tmp_path):
    code, io = _run(["riesz", "--config", _cfg(tmp_path, LAT)], capsys)
    out = json.loads(io.out)
    assert code == 0 and len(out["values"]) == 2 and out["values"][0] > out["values"][1]
    grid = dict(LAT)
    grid.pop("points")
    assert _run(["riesz", "--config", _cfg(tmp_path, grid), "--out", str(tmp_path)], capsys)[0] == 0
    assert (tmp_path / "riesz.csv").exists()


def test_wolff_dirac(capsys, tmp_path):
    code, io = _run(["wolff", "--config", _cfg(tmp_path, RAD)], capsys)
    out = json.loads(io.out)
    assert code == 0 and len(out["values"]) == 2 and out["values"][0] > out["values"][1] > 0
    assert out["R"] == 2.0


def test_kfun_profile_and_values(capsys, tmp_path):
    cfg = dict(LAT, theta=0.5)
    code, _ = _run(["kfun", "--config", _cfg(tmp_path, cfg), "--out", str(tmp_path)], capsys)
    prof = json.loads((tmp_path / "kfun.json").read_text())
    assert code == 0 and prof["theta"] == 0.5 and (tmp_path / "k-profile.csv").exists()
    code, io = _run(["kfun", "--config", _cfg(tmp_path, dict(LAT, t_grid=[0.01, 100.0]))], capsys)
    K = json.loads(io.out)["K"]
    assert code == 0 and K[0] == pytest.approx(0.01)
    narrow = dict(LAT, theta=0.5, t_grid=[1e-6, 2e-6, 3e-6])
    assert _run(["kfun", "--config", _cfg(tmp_path, narrow)], capsys)[0] == 1


def test_example_fundamental(capsys, tmp_path):
    code, _ = _run(["example-fundamental", "--n", "3", "--p", "2", "--cells-per-decade", "16",
                    "--out", str(tmp_path)], capsys)
    out = json.loads((tmp_path / "example-fundamental.json").read_text())
    assert code == 0 and out["u_threshold"] == pytest.approx(3.0)
    assert out["gradient_threshold"] == pytest.approx(1.5)
    assert (tmp_path / "fundamental.csv").read_text().startswith("r,u,grad_u")
    code, io = _run(["example-fundamental", "--n", "3", "--p", "3.5"], capsys)
    assert code == 1 and "p < n" in io.err


def test_check_and_suite_subcommands(capsys, tmp_path):
    code, io = _run(["check", "infimum-lemma", "--out", str(tmp_path)], capsys)
    assert code == 0 and "infimum-lemma: pass" in io.out
    assert (tmp_path / "infimum-lemma.json").exists() and (tmp_path / "infimum-lemma.csv").exists()
    cfg = _cfg(tmp_path, {"policy": {"divergent_slope": 5.0}})
    assert _run(["check", "weak-strong-embed", "--config", cfg], capsys)[0] in (1, 2)
    assert _run(["check", "tail-kernel", "--config", _cfg(tmp_path, {"bogus": 1})], capsys)[0] == 64
    out = tmp_path / "suite"
    code, _ = _run(["suite", "--only", "infimum-lemma,tail-kernel", "--out", str(out)], capsys)
    summary = json.loads((out / "suite.json").read_text())
    assert code == 0 and summary["exit_code"] == 0
    assert summary["verdicts"] == {"infimum-lemma": "pass", "tail-kernel": "pass"}
    bad = _cfg(tmp_path, {"checks": {"weak-strong-embed": {"params": {"n": 1}}}})
    code, io = _run(["suite", "--only", "weak-strong-embed", "--config", bad], capsys)
    assert code == 1 and "fail [" in io.out


@pytest.mark.skipif(shutil.which("varexp") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["varexp", "check", "tail-kernel"], capture_output=True, text=True)
    assert proc.returncode == 0 and "tail-kernel: pass" in proc.stdout
    assert subprocess.run(["varexp", "bogus"], capture_output=True).returncode == 64
