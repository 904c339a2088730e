import json
import subprocess
import sys

import numpy as np
import pytest

from ggmips.cli import main
from ggmips.graph import cycle_graph, maximal_cliques, write_graph
from ggmips.harness import wishart_sample
from ggmips.io import read_matrix_csv, write_matrix_csv
from ggmips.linalg import SymMatrix
from ggmips.model import SuffStats, likelihood_residual

from helpers import K4_CHAIN


@pytest.fixture
def cycle_files(tmp_path):
    g = cycle_graph(5)
    write_graph(g, tmp_path / "g.txt")
    w = wishart_sample(5, 5, 0)
    write_matrix_csv(tmp_path / "w.csv", w)
    rng = np.random.default_rng(0)
    y = rng.standard_normal((40, 5))
    np.savetxt(tmp_path / "y.csv", y, delimiter=",")
    return tmp_path, g, w


def test_fit_scatter(cycle_files, capsys):
    d, g, w = cycle_files
    code = main(["fit", "--graph", str(d / "g.txt"), "--scatter", str(d / "w.csv"),
                 "--n", "5", "--out", str(d / "fit")])
    assert code == 0
    k = read_matrix_csv(d / "fit.csv")
    summary = json.loads((d / "fit.json").read_text())
    assert set(summary) == {"n", "sweeps", "residual", "loglik", "converged"}
    assert summary["converged"] and summary["n"] == 5
    resid = likelihood_residual(k, SuffStats(5, w), maximal_cliques(g))
    assert resid <= 1e-5 * np.max(w.values)
    assert "converged=True" in capsys.readouterr().out


@pytest.mark.parametrize("mode", ["direct", "localized"])
def test_fit_samples(cycle_files, mode):
    d, _, _ = cycle_files
    code = main(["fit", "--graph", str(d / "g.txt"), "--data", str(d / "y.csv"),
                 "--mode", mode, "--out", str(d / mode)])
    assert code == 0
    assert json.loads((d / f"{mode}.json").read_text())["n"] == 40


def test_fit_samples_with_numeric_header(cycle_files):
    d, _, _ = cycle_files
    y = np.loadtxt(d / "y.csv", delimiter=",")
    # columns written in reverse label order
    np.savetxt(d / "yh.csv", y[:, ::-1], delimiter=",", header="5,4,3,2,1", comments="")
    assert main(["fit", "--graph", str(d / "g.txt"), "--data", str(d / "yh.csv"), "--header",
                 "--tol", "1e-12", "--out", str(d / "a")]) == 0
    assert main(["fit", "--graph", str(d / "g.txt"), "--data", str(d / "y.csv"),
                 "--tol", "1e-12", "--out", str(d / "b")]) == 0
    a, b = read_matrix_csv(d / "a.csv"), read_matrix_csv(d / "b.csv")
    assert np.max(np.abs(a.values - b.values)) <= 1e-8 * np.max(np.abs(b.values))


def test_fit_not_converged(cycle_files):
    d, _, _ = cycle_files
    code = main(["fit", "--graph", str(d / "g.txt"), "--scatter", str(d / "w.csv"),
                 "--n", "5", "--max-sweeps", "1", "--tol", "1e-14", "--out", str(d / "fit")])
    assert code == 3
    assert json.loads((d / "fit.json").read_text())["converged"] is False


def test_fit_not_pd(cycle_files):
    d, _, _ = cycle_files
    write_matrix_csv(d / "bad.csv", SymMatrix(-np.eye(5)))
    code = main(["fit", "--graph", str(d / "g.txt"), "--scatter", str(d / "bad.csv"),
                 "--n", "5", "--out", str(d / "fit")])
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["fit", "--graph", "missing.txt", "--scatter", "w.csv", "--n", "5", "--out", "x"],
    ["fit", "--graph", "g.txt", "--scatter", "w.csv", "--out", "x"],
    ["fit", "--graph", "g.txt", "--out", "x"],
    ["fit", "--graph", "g.txt", "--scatter", "w.csv", "--n", "2", "--out", "x"],
    ["nonsense"],
    [],
])
def test_input_errors(cycle_files, argv, monkeypatch):
    d, _, _ = cycle_files
    monkeypatch.chdir(d)
    assert main(argv) == 1


def test_scatter_label_mismatch(cycle_files):
    d, _, w = cycle_files
    write_matrix_csv(d / "w6.csv", wishart_sample(6, 6, 1))
    code = main(["fit", "--graph", str(d / "g.txt"), "--scatter", str(d / "w6.csv"),
                 "--n", "6", "--out", str(d / "fit")])
    assert code == 1


def test_bench(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--dims", "5,8", "--reps", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[0] == "dim" and len(lines) == 5
    assert capsys.readouterr().out.count("mode=") == 4


def test_decompose(tmp_path, capsys):
    write_graph(K4_CHAIN, tmp_path / "chain.txt")
    assert main(["decompose", "--graph", str(tmp_path / "chain.txt")]) == 0
    out = capsys.readouterr().out
    assert "chordal: True" in out
    assert "  1 2 3 4\n  3 4 5 6\n  5 6 7 8\n" in out
    assert "  3 4\n  5 6\n" in out


def test_probe(tmp_path, capsys):
    assert main(["probe-inverse", "--dims", "1,20", "--reps", "2",
                 "--out", str(tmp_path / "p.csv")]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_console_script(tmp_path):
    write_graph(cycle_graph(6), tmp_path / "c6.txt")
    proc = subprocess.run([sys.executable, "-m", "ggmips.cli", "decompose",
                           "--graph", str(tmp_path / "c6.txt")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "chordal: False" in proc.stdout
