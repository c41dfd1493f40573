import numpy as np
import pytest

from shapencg import cli
from shapencg.optimize import read_history_csv


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.txt"
    cfg_file.write_text("# comment\nproblem = eit\nmethod=lbfgs3\ntol=1e-3\nk-max = 7\n")
    cfg = cli.resolve_config(cli.parse_config_text(cfg_file.read_text()), {"tol": 2e-3})
    assert cfg.problem == "eit" and cfg.method == "lbfgs3" and cfg.k_max == 7
    assert cfg.tol == 2e-3
    # per-problem defaults fill in what the file does not set
    assert (cfg.lam, cfg.mu, cfg.delta, cfg.mesh_elems) == (0.0, "1.0", 0.0, 11870)


def test_problem_defaults():
    p = cli.resolve_config({}, {"problem": "poisson"})
    assert (p.t0, p.k_max, p.lam, p.mu, p.delta, p.tol) == (1.0, 50, 1.429, "0.357", 0.2, 5e-4)
    s = cli.resolve_config({}, {"problem": "stokes"})
    assert s.k_max == 250 and s.mu == "laplace"


@pytest.mark.parametrize("text", ["bogus=1\n", "no equals sign\n"])
def test_config_errors(text):
    with pytest.raises(ValueError):
        cli.parse_config_text(text)


@pytest.mark.parametrize("over", [{"tol": 2.0}, {"omega": 1.5}, {"method": "newton"}, {"mu": "abc"}])
def test_config_validation(over):
    with pytest.raises(ValueError):
        cli.resolve_config({}, over)


def test_invalid_method_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--method", "nope"])
    assert exc.value.code == 2


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "r"
    rc = cli.main(["run", "--problem", "poisson", "--mesh-elems", "800", "--k-max", "3", "--out", str(out)])
    assert rc == 0
    for name in ("history.csv", "initial.vtk", "final.vtk", "summary.txt", "config.txt"):
        assert (out / name).exists()
    rows, status = read_history_csv(out / "history.csv")
    assert status == "MaxIterations" and len(rows) == 4
    line = capsys.readouterr().out
    assert "status=MaxIterations" in line and "state_solves=" in line


def test_k_max_zero(tmp_path):
    rc = cli.main(["run", "--mesh-elems", "800", "--k-max", "0", "--out", str(tmp_path)])
    rows, status = read_history_csv(tmp_path / "history.csv")
    assert rc == 0 and status == "MaxIterations" and len(rows) == 1


def test_run_is_deterministic(tmp_path):
    for d in ("a", "b"):
        cli.main(["run", "--mesh-elems", "800", "--k-max", "4", "--method", "ncg-pr", "--out", str(tmp_path / d)])
    assert (tmp_path / "a/history.csv").read_bytes() == (tmp_path / "b/history.csv").read_bytes()


def test_compare_table_consistent_with_histories(tmp_path):
    out = tmp_path / "c"
    rc = cli.main(["compare", "--mesh-elems", "800", "--k-max", "6", "--methods", "gd,ncg-dy",
                   "--out", str(out)])
    assert rc == 0
    lines = (out / "compare.csv").read_text().splitlines()
    assert lines[0] == ("method,it_1e-1,it_5e-2,it_1e-2,it_5e-3,it_1e-3,it_5e-4,"
                        "state_solves,adjoint_solves")
    assert len(lines) == 3
    for line in lines[1:]:
        cells = line.split(",")
        rows, _ = read_history_csv(out / cells[0] / "history.csv")
        for thr, cell in zip((1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4), cells[1:7]):
            hit = next((int(r["iter"]) for r in rows if r["rel_grad_norm"] <= thr), None)
            assert cell == ("-" if hit is None else str(hit))
        assert int(cells[7]) == int(rows[-1]["state_solves"])
        assert int(cells[8]) == int(rows[-1]["adjoint_solves"])
    assert (out / "compare.txt").exists()


def test_compare_row_error_does_not_abort(tmp_path, monkeypatch):
    real = cli.execute

    def flaky(cfg, mesh, out):
        if cfg.method == "gd":
            raise RuntimeError("boom")
        return real(cfg, mesh, out)

    monkeypatch.setattr(cli, "execute", flaky)
    rc = cli.main(["compare", "--mesh-elems", "800", "--k-max", "2", "--methods", "gd,ncg-fr",
                   "--out", str(tmp_path)])
    lines = (tmp_path / "compare.csv").read_text().splitlines()
    assert rc == 1 and len(lines) == 3
    assert lines[1].startswith("GD,-") and lines[1].endswith("error,error")
    assert lines[2].startswith("NCG-FR,")


def test_format_compare_dashes():
    csv, text = cli.format_compare([("GD", [3, 13, None, None, None, None], 40, 20)])
    assert csv.splitlines()[1] == "GD,3,13,-,-,-,-,40,20"
    assert len(text.splitlines()) == 2


def test_check_derivative(tmp_path):
    args = ["check-derivative", "--mesh-elems", "1500", "--fields", "2", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    first = (tmp_path / "fd_report.txt").read_text()
    assert "overall=PASS" in first and first.count("result=PASS") == 2
    cli.main(args)
    assert (tmp_path / "fd_report.txt").read_text() == first


def test_check_derivative_single_step(tmp_path):
    rc = cli.main(["check-derivative", "--mesh-elems", "800", "--fields", "1", "--steps", "1e-2",
                   "--out", str(tmp_path)])
    text = (tmp_path / "fd_report.txt").read_text()
    table = [ln for ln in text.splitlines() if ln.strip().startswith("1.0e-02")]
    assert len(table) == 1 and len(table[0].split()) == 4     # empty order column
    assert rc in (0, 1)


def test_check_derivative_inadmissible(tmp_path, capsys):
    rc = cli.main(["check-derivative", "--mesh-elems", "800", "--fields", "1", "--steps", "10",
                   "--out", str(tmp_path)])
    assert rc == 1
    assert "inadmissible" in capsys.readouterr().err


def test_mesh_info(tmp_path, capsys):
    assert cli.main(["mesh-info", "--problem", "eit", "--mesh-elems", "1000", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "tag interface" in out and "cells in=" in out
    assert cli.main(["mesh-info", "--mesh", str(tmp_path / "initial_mesh.txt")]) == 0
    assert capsys.readouterr().out == out


def test_eit_measurement_cache(tmp_path):
    cfg = cli.resolve_config({}, {"problem": "eit", "mesh_elems": 1000, "out": str(tmp_path)})
    cli.build_problem(cfg, cli.initial_mesh(cfg))
    cache = tmp_path / "eit_measurements.txt"
    assert cache.exists()
    data = np.loadtxt(cache)
    assert data.shape[1] == 4
