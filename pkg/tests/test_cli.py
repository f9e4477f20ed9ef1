import csv
import json

import numpy as np
import pytest

from nlwave import cli


@pytest.fixture(autouse=True)
def output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "runs"))
    return tmp_path / "runs"


def _rows(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def test_spectra_neumann_box(output_root, capsys):
    assert cli.main(["spectra", "--bc", "neumann", "--kernel", "unitbox", "--M", "8"]) == 0
    rows = _rows(output_root / "spectra" / "spectra.csv")
    assert len(rows) == 9
    row = next(r for r in rows if r["k"] == "2")
    assert abs(float(row["coeff"]) + 2 / np.pi) < 1e-10
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["subcommand"] == "spectra" and summary["c_id"] == pytest.approx(1.0)


def test_schema_header(output_root):
    cli.main(["spectra", "--bc", "p", "--M", "2"])
    assert (output_root / "spectra" / "spectra.csv").read_text().startswith("# schema=1\n")


def test_solve_dirichlet_boundary_column(output_root):
    assert cli.main(["solve", "--bc", "dirichlet", "--u0", "box", "--v0", "zero", "--T", "20", "--frames", "40"]) == 0
    out = output_root / "solve"
    obs = _rows(out / "observables.csv")
    assert len(obs) == 41
    assert max(abs(float(r["u_left"])) for r in obs) < 5e-3
    assert max(abs(float(r["u_right"])) for r in obs) < 5e-3
    frames = _rows(out / "frames.csv")
    assert set(frames[0]) == {"t", "x", "u"}
    assert (out / "field.dat").exists()


def test_solve_spectral(output_root):
    assert cli.main(["solve", "--method", "spectral", "--bc", "a", "--u0", "bump", "--T", "1", "--frames", "4", "--M", "64"]) == 0
    obs = _rows(output_root / "solve" / "observables.csv")
    assert max(float(r["bc_defect"]) for r in obs) < 5e-3


def test_convergence_csv(output_root):
    assert cli.main(["convergence", "--bc", "periodic", "--ell", "1", "--levels", "3..4"]) == 0
    rows = _rows(output_root / "convergence" / "convergence.csv")
    assert [r["level"] for r in rows] == ["3", "4"]
    assert rows[0]["order"] == "" and abs(float(rows[1]["order"]) - 2.0) < 0.1
    assert set(rows[0]) == {"bc", "form", "ell", "level", "N", "error", "order"}


def test_kernel_dump(output_root, capsys):
    assert cli.main(["kernel", "--points", "11"]) == 0
    text = (output_root / "kernel" / "halfwave.dat").read_text()
    assert text.startswith("# k_NC = -2.0710678")
    data = np.loadtxt(output_root / "kernel" / "extensions.dat")
    assert data.shape == (31, 4)


def test_matrices(output_root):
    assert cli.main(["matrices", "--bc", "n", "--N", "4", "--ell", "1"]) == 0
    A = np.loadtxt(output_root / "matrices" / "A.csv", delimiter=",")
    assert A.shape == (8, 8) and np.allclose(A, A.T)
    head = (output_root / "matrices" / "A.triplets").read_text().splitlines()[0]
    assert head.startswith("# 8 8 ")


def test_validate(output_root):
    assert cli.main(["validate"]) == 0
    results = json.loads((output_root / "validate" / "validate.json").read_text())
    assert results and all(r["passed"] for r in results)


def test_unknown_subcommand(capsys):
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage" and err["exit_code"] == 2


def test_missing_subcommand(capsys):
    assert cli.main([]) == cli.EXIT_USAGE


def test_bad_flag_value(capsys):
    assert cli.main(["solve", "--T", "soon"]) == cli.EXIT_USAGE


def test_config_violations_are_aggregated(capsys):
    assert cli.main(["solve", "--bc", "robin", "--N", "1", "--u0", "wiggle", "--frames", "0"]) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and len(err["violations"]) == 4


def test_runtime_failure(capsys):
    assert cli.main(["solve", "--bc", "d", "--N", "16", "--ell", "1", "--T", "1", "--k", "0.1"]) == cli.EXIT_RUNTIME
    assert json.loads(capsys.readouterr().err)["error"] == "StabilityError"


def test_config_file_and_flag_precedence(tmp_path, output_root):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"bc": "dirichlet", "M": 4, "form": "canonical"}))
    assert cli.main(["spectra", "--config", str(cfg), "--M", "6"]) == 0
    echoed = json.loads((output_root / "spectra" / "config.json").read_text())
    assert echoed["bc"] == "dirichlet" and echoed["M"] == 6 and echoed["form"] == "canonical"


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"bc": "p", "colour": "red", "M": "many"}))
    assert cli.main(["spectra", "--config", str(cfg)]) == cli.EXIT_CONFIG
    assert "colour" in capsys.readouterr().err
    cfg.write_text("{not json")
    assert cli.main(["spectra", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_determinism_and_round_trip(output_root):
    args = ["solve", "--bc", "periodic", "--u0", "disc", "--T", "1", "--N", "8", "--ell", "1", "--frames", "5"]
    assert cli.main(args + ["--out", str(output_root / "a")]) == 0
    assert cli.main(args + ["--out", str(output_root / "b")]) == 0
    assert cli.main(["solve", "--config", str(output_root / "a" / "config.json"), "--out", str(output_root / "c")]) == 0
    for name in ("frames.csv", "observables.csv", "field.dat", "config.json"):
        first = (output_root / "a" / name).read_bytes()
        assert first == (output_root / "b" / name).read_bytes()
        assert first == (output_root / "c" / name).read_bytes()


def test_parse_int_list():
    assert cli.parse_int_list("3..7") == [3, 4, 5, 6, 7]
    assert cli.parse_int_list("0,2") == [0, 2]
    assert cli.parse_int_list("1") == [1]
