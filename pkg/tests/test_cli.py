import json
import subprocess
import sys

import numpy as np
import pytest

from ergokit import io
from ergokit.cli import RunConfig, UsageError, main, parse_alpha, resolve_threads
from ergokit.spectra import load_spectrum


def run(*args):
    return main([str(a) for a in args])


def test_gen_cue(tmp_path):
    assert run("gen", "--kind", "cue", "--d", 2048, "--seed", 7, "--outdir", tmp_path) == 0
    path = tmp_path / "cue.txt"
    assert len(path.read_text().splitlines()) == 2048
    side = io.read_sidecar(io.sidecar_for(path))
    assert side["run_config"]["generator"] == {"kind": "cue", "d": 2048, "seed": 7, "stream": 0}
    assert side["tool"] == "ergokit" and "version" in side
    assert load_spectrum(path).meta["generator"] == "cue"


def test_gen_torus(tmp_path):
    out = tmp_path / "t.txt"
    assert run("gen", "--kind", "torus", "--omega", "1,1.41421356237", "--L1", 40, "--L2", 40, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 2133


def test_gen_invalid_kind(tmp_path, capsys):
    assert run("gen", "--kind", "goe", "--d", 10, "--outdir", tmp_path) == 2
    cap = capsys.readouterr()
    assert "unknown kind" in cap.err and cap.out == ""


@pytest.mark.parametrize("args", [["gen", "--kind", "cue"], ["gen", "--kind", "torus", "--omega", "1,2"], ["gen", "--kind", "cue", "--d", "0"], ["frobnicate"]])
def test_usage_errors(tmp_path, args):
    assert run(*args, "--outdir", tmp_path) == 2 if args[0] == "gen" else run(*args) == 2


def test_mixed_zero_trials_is_usage_error(tmp_path):
    assert run("mixed", "--d", 48, "--n", 6, "--trials", 0, "--outdir", tmp_path) == 2


def test_mixed_runs(tmp_path, capsys):
    assert run("mixed", "--d", 48, "--n", 6, "--trials", 50, "--outdir", tmp_path) == 0
    summary = json.loads((tmp_path / "mixed_summary.json").read_text())
    assert summary["violations"] == 0 and summary["trials"] == 50
    header, rows = io.read_csv(tmp_path / "mixed.csv")
    assert header == ["trial", "k", "P", "R", "bound", "margin"] and len(rows) == 300
    assert "0 violations" in capsys.readouterr().out


def test_analyze_cue(tmp_path):
    assert run("gen", "--kind", "cue", "--d", 2048, "--seed", 7, "--outdir", tmp_path) == 0
    out = tmp_path / "a"
    assert run("analyze", "--input", tmp_path / "cue.txt", "--outdir", out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["ergodic"] and rep["aperiodic"] and not rep["quasiperiodic"]
    header, rows = io.read_csv(out / "persistence.csv")
    assert header == ["p", "z", "z2", "eps", "bound", "gaussian"]
    assert int(rows[0][0]) == -4096 and int(rows[-1][0]) == 4096
    for name in ("sff", "modes", "spacings", "polar", "poisson_ref"):
        assert (out / f"{name}.csv").exists() and io.sidecar_for(out / f"{name}.csv").exists()
    assert io.read_csv(out / "poisson_ref.csv")[0] == ["p", "z2"]


def test_analyze_torus_and_picket(tmp_path):
    assert run("analyze", "--kind", "torus", "--omega", "1,1.4142135623730951", "--L1", 40, "--L2", 40, "--outdir", tmp_path / "t") == 0
    rep = json.loads((tmp_path / "t" / "report.json").read_text())
    assert rep["ergodic"] and not rep["aperiodic"] and rep["quasiperiodic"]
    assert run("analyze", "--kind", "picket", "--d", 100, "--outdir", tmp_path / "p") == 0
    rep = json.loads((tmp_path / "p" / "report.json").read_text())
    assert rep["quasiperiodic"]


def test_analyze_json_format_and_plot(tmp_path):
    assert run("analyze", "--kind", "cue", "--d", 128, "--seed", 1, "--format", "json", "--plot", "--outdir", tmp_path) == 0
    data = json.loads((tmp_path / "persistence.json").read_text())
    assert set(data) == {"p", "z", "z2", "eps", "bound", "gaussian"} and len(data["p"]) == 513
    for name in ("persistence", "sff", "modes", "spacings", "polar"):
        png = tmp_path / f"{name}.png"
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert io.sidecar_for(png).exists()


def test_analyze_q_modes(tmp_path):
    qfile = tmp_path / "q.txt"
    qfile.write_text("\n".join(str(i) for i in range(16)[::-1]))
    assert run("analyze", "--kind", "poisson", "--d", 16, "--q", qfile, "--outdir", tmp_path / "f") == 0
    assert run("analyze", "--kind", "poisson", "--d", 16, "--q", "identity", "--t0", 0.5, "--outdir", tmp_path / "i") == 0
    rep = json.loads((tmp_path / "i" / "report.json").read_text())
    assert rep["t0"] == 0.5
    assert run("analyze", "--kind", "poisson", "--d", 16, "--q", tmp_path / "nope.txt", "--outdir", tmp_path / "x") == 2


def test_analyze_bad_input(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nfoo\n")
    assert run("analyze", "--input", bad, "--outdir", tmp_path) == 2
    assert run("analyze", "--input", tmp_path / "missing.txt", "--outdir", tmp_path) == 2


def test_sweep_count_one_equals_analyze(tmp_path):
    assert run("sweep", "--kind", "cue", "--d", 256, "--seed", 3, "--count", 1, "--outdir", tmp_path / "s") == 0
    assert run("analyze", "--kind", "cue", "--d", 256, "--seed", 3, "--outdir", tmp_path / "a") == 0
    header, rows = io.read_csv(tmp_path / "s" / "sweep.csv")
    row = dict(zip(header, rows[0]))
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert float(row["sigma2"]) == rep["sigma2"] and float(row["eps1"]) == rep["eps1"]
    assert int(row["t_R"]) == rep["t_R"] and bool(int(row["ergodic"])) == rep["ergodic"]


def test_sweep_thread_independent(tmp_path):
    assert run("sweep", "--kind", "coe", "--d", 128, "--count", 6, "--threads", 1, "--outdir", tmp_path / "a") == 0
    assert run("--threads", 4, "sweep", "--kind", "coe", "--d", 128, "--count", 6, "--outdir", tmp_path / "b") == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert (tmp_path / "a" / "sweep_summary.json").read_bytes() == (tmp_path / "b" / "sweep_summary.json").read_bytes()


def test_sweep_rejects_deterministic_generators(tmp_path):
    assert run("sweep", "--kind", "picket", "--d", 10, "--outdir", tmp_path) == 2


def test_classical_table(tmp_path):
    assert run("classical", "--alpha", "sqrt2", "--convergents", 6, "--outdir", tmp_path) == 0
    header, rows = io.read_csv(tmp_path / "classical_rotation.csv")
    assert header[:4] == ["q", "p", "epsbar", "epsbar_q"]
    assert [int(r[0]) for r in rows] == [1, 2, 5, 12, 29, 70]
    assert all(float(r[3]) <= 1 for r in rows)
    header, rows = io.read_csv(tmp_path / "classical_torus.csv")
    assert all(float(r[3]) <= 2 for r in rows)


def test_bound(tmp_path, capsys):
    assert run("bound", "--lam", 1 / 1024, "--gamma", 0, "--d", 1024, "--outdir", tmp_path) == 0
    data = json.loads((tmp_path / "bound.json").read_text())
    assert data["min_eps1"] == pytest.approx(np.pi**2 / 3072)
    assert "rigidity_targets" in data
    assert run("bound", "--lam", 1e-3, "--gamma", -1, "--outdir", tmp_path) == 2


def test_parse_alpha():
    assert parse_alpha("sqrt2") == pytest.approx(2**0.5)
    assert parse_alpha("sqrt(3)") == pytest.approx(3**0.5)
    assert parse_alpha("golden") == pytest.approx((1 + 5**0.5) / 2)
    assert parse_alpha("0.25") == 0.25


def test_threads_resolution(monkeypatch):
    monkeypatch.setenv("ERGOKIT_THREADS", "3")
    assert resolve_threads(None) == 3 and resolve_threads(2) == 2
    monkeypatch.setenv("ERGOKIT_THREADS", "x")
    with pytest.raises(UsageError):
        resolve_threads(None)
    with pytest.raises(UsageError):
        resolve_threads(0)


def test_bad_env_threads_exit_code(monkeypatch, tmp_path):
    monkeypatch.setenv("ERGOKIT_THREADS", "many")
    assert run("bound", "--lam", 1e-3, "--gamma", 0, "--outdir", tmp_path) == 2


def test_runconfig_validation():
    with pytest.raises(UsageError):
        RunConfig(subcommand="gen", generator={"kind": "cue", "d": 8}, format="xml").validate()
    with pytest.raises(UsageError):
        RunConfig(subcommand="analyze", generator={"kind": "cue", "d": 8}, thresholds=[1, 2]).validate()
    with pytest.raises(UsageError):
        RunConfig(subcommand="analyze", generator={"kind": "cue", "d": 8}, cfg={"t0": -1, "q": "sorted"}).validate()
    rc = RunConfig(subcommand="gen", generator={"kind": "cue", "d": 8})
    assert RunConfig.from_dict(rc.to_dict()) == rc


def test_rerun_missing_config(tmp_path):
    p = tmp_path / "x.meta.json"
    p.write_text("{}")
    assert run("rerun", p) == 2


def test_csv_dialect(tmp_path):
    path = io.write_csv(tmp_path / "t.csv", ["a", "b"], [[0.1, 2], [True, None]])
    raw = path.read_bytes()
    assert raw == b"a,b\n0.10000000000000001,1\n2,\n"


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ergokit.cli", "bound", "--lam", "1e-6", "--gamma", "2", "--M", "2", "--outdir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and "0.0001" in res.stdout


def test_omega_accepts_named_constants(tmp_path):
    assert run("gen", "--kind", "torus", "--omega", "1,sqrt2", "--L1", 40, "--L2", 40, "--outdir", tmp_path) == 0
    assert len((tmp_path / "torus.txt").read_text().splitlines()) == 2133
