import json
import os

import numpy as np
import pytest

from trimreg.cli import main

from conftest import make_instance


@pytest.fixture
def small_csv(tmp_path, rng):
    beta = np.array([1.0, 2.0, -1.5, 0.0])
    X, y, _ = make_instance(rng, 60, 4, beta=beta, sigma=0.5)
    y[:3] += 12.0
    path = tmp_path / "data.csv"
    lines = ["x1,x2,x3,yy"]
    for i in range(60):
        lines.append(",".join(repr(float(v)) for v in (X[i, 1], X[i, 2], X[i, 3], y[i])))
    path.write_text("\n".join(lines) + "\n")
    return str(path), beta


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_fit_json_roundtrip(small_csv, tmp_path, capsys):
    path, beta = small_csv
    out = str(tmp_path / "fit.json")
    code = main(["fit", "--data", path, "--response", "yy", "--method", "scadws",
                 "--trim", "3", "--lambda", "0.2", "--starts", "100", "--out", out])
    assert code == 0
    doc = json.loads(open(out).read())
    assert doc["method"] == "scadws"
    assert len(doc["beta_hat"]) == 4
    assert doc["feature_names"][0] == "(intercept)"
    assert set(doc["msom"]) == {0, 1, 2}
    # coefficients are reported on the original data scale
    got = np.asarray(doc["beta_hat"])
    assert np.max(np.abs(got - beta)) < 0.5
    assert set(doc["beta_nonzero"]) <= set(doc["feature_names"])
    for rec in doc["viom_detail"]:
        assert 0.0 < rec["weight"] < 1.0


def test_fit_trim_fraction_equals_count(small_csv, tmp_path):
    path, _ = small_csv
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    common = ["fit", "--data", path, "--response", "yy", "--method", "sparselts",
              "--lambda", "0.1", "--starts", "100"]
    assert main(common + ["--trim", "0.05", "--out", a]) == 0
    assert main(common + ["--trim", "3", "--out", b]) == 0
    assert open(a).read() == open(b).read()


def test_fit_deterministic_across_runs(small_csv, tmp_path):
    path, _ = small_csv
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    common = ["fit", "--data", path, "--response", "yy", "--method", "scad2s",
              "--trim", "3", "--lambda", "0.2", "--starts", "100", "--seed", "5"]
    assert main(common + ["--out", a]) == 0
    assert main(common + ["--out", b]) == 0
    assert open(a).read() == open(b).read()


def test_input_errors_name_row_and_column(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,yy\n1.0,2.0,3.0\n1.0,oops,3.0\n")
    code, _, err = run_cli(["fit", "--data", str(bad), "--response", "yy"], capsys)
    assert code == 2
    assert "row 3" in err and "column b" in err and "oops" in err

    bad.write_text("a,b,yy\n1.0,2.0\n")
    code, _, err = run_cli(["fit", "--data", str(bad), "--response", "yy"], capsys)
    assert code == 2 and "row 2" in err

    bad.write_text("a,b,yy\n1.0,,3.0\n")
    code, _, err = run_cli(["fit", "--data", str(bad), "--response", "yy"], capsys)
    assert code == 2 and "missing value" in err and "column b" in err


def test_missing_file_and_missing_response(tmp_path, capsys, small_csv):
    code, _, err = run_cli(["fit", "--data", str(tmp_path / "nope.csv"),
                            "--response", "yy"], capsys)
    assert code == 2 and "cannot open" in err
    path, _ = small_csv
    code, _, err = run_cli(["fit", "--data", path, "--response", "zz"], capsys)
    assert code == 2 and "'zz'" in err


def test_config_errors(small_csv, capsys):
    path, _ = small_csv
    code, _, err = run_cli(["fit", "--data", path, "--response", "yy",
                            "--trim", "1.5"], capsys)
    assert code == 4
    code, _, err = run_cli(["fit", "--data", path, "--response", "yy",
                            "--lambda", "abc"], capsys)
    assert code == 4
    code, _, err = run_cli(["weights", "--data", path, "--response", "yy",
                            "--viom", "3", "--msom", "3"], capsys)
    assert code == 4 and "disjoint" in err
    code, _, err = run_cli(["weights", "--data", path, "--response", "yy",
                            "--viom", "999"], capsys)
    assert code == 4 and "out of range" in err


def test_solver_failure_exit_code(tmp_path, capsys):
    # duplicated predictor column makes the design rank deficient
    lines = ["a,b,yy"] + [f"{v}.0,{v}.0,{2*v}.0" for v in range(12)]
    path = tmp_path / "rankdef.csv"
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli(["weights", "--data", str(path), "--response", "yy",
                            "--no-intercept", "--viom", "1"], capsys)
    assert code == 3 and "solver failed" in err


def test_tune_csv_output(small_csv, tmp_path, capsys):
    path, _ = small_csv
    out = str(tmp_path / "grid.csv")
    code = main(["tune", "--data", path, "--response", "yy",
                 "--trim-grid", "0,3", "--lambda-grid", "0.1,0.5",
                 "--starts", "50", "--out", out])
    assert code == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "k_n,lambda,k_p,bicr,sigma2_hat,n_viom"
    assert len(lines) == 5
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == 6
        int(cells[0]); float(cells[1]); int(cells[2]); float(cells[3])
    err = capsys.readouterr().err
    assert "best:" in err


def test_weights_subcommand(small_csv, tmp_path):
    path, _ = small_csv
    out = str(tmp_path / "w.json")
    code = main(["weights", "--data", path, "--response", "yy",
                 "--msom", "0,1,2", "--viom", "10", "--out", out])
    assert code == 0
    doc = json.loads(open(out).read())
    w = doc["weights"]
    assert w[0] == 0.0 and w[1] == 0.0 and w[2] == 0.0
    assert 0.0 < w[10] <= 1.0
    assert doc["viom"][0]["omega_hat"] is not None
    code = main(["weights", "--data", path, "--response", "yy",
                 "--msom", "0,1,2", "--viom", "10", "--plugin", "--out", out])
    assert code == 0
    doc = json.loads(open(out).read())
    assert doc["plugin"] is True and doc["viom"][0]["omega_hat"] is None


def test_simulate_writes_metrics_and_manifest(tmp_path, capsys):
    sc = {"n": 40, "p": 3, "p0": 3, "mv_frac": 0.1, "v": 10.0, "seed": 3,
          "scenario_id": 42}
    sc_path = tmp_path / "sc.json"
    sc_path.write_text(json.dumps(sc))
    out_dir = str(tmp_path / "results")
    code = main(["simulate", "--scenario", str(sc_path), "--estimators", "ols,opt",
                 "--reps", "3", "--jobs", "1", "--out-dir", out_dir])
    assert code == 0
    lines = open(os.path.join(out_dir, "metrics.csv")).read().strip().splitlines()
    assert lines[0].startswith("estimator,n,replicates")
    assert len(lines) == 3
    manifest = json.loads(open(os.path.join(out_dir, "manifest.json")).read())
    assert manifest["reps"] == 3 and "version" in manifest and "backend" in manifest


def test_simulate_bad_scenario_files(tmp_path, capsys):
    p = tmp_path / "sc.json"
    p.write_text("{not json")
    code, _, err = run_cli(["simulate", "--scenario", str(p)], capsys)
    assert code == 2
    p.write_text(json.dumps({"n": 40, "p": 3, "p0": 3, "bogus_key": 1}))
    code, _, err = run_cli(["simulate", "--scenario", str(p)], capsys)
    assert code == 4


def test_manifest_and_no_command(capsys):
    code, out, _ = run_cli(["--manifest"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert {"version", "backend", "numpy"} <= set(doc)
    code, _, err = run_cli([], capsys)
    assert code == 4
