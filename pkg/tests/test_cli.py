import csv
import json

import pytest

from lowrank_pe.cli import RESULT_COLUMNS, execute

CONFIG = {
    "model": {"kind": "graded", "N": 16, "d": 4},
    "strategy": ["uniform_eba", "alg1", {"name": "alg2", "spanner": "approx", "C": 2}],
    "stopping": {"type": "fixed", "n": 400},
    "trials": 20,
    "seed": 5,
}


def write(tmp_path, doc, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def check_schema(rows):
    assert rows[0] == RESULT_COLUMNS
    for row in rows[1:]:
        assert len(row) == len(RESULT_COLUMNS)
        int(row[1]), int(row[2]), int(row[3]), int(row[4]), int(row[10])
        for cell in row[5:10]:
            float(cell)


def test_run_happy_path(tmp_path):
    cfg = write(tmp_path, CONFIG)
    out = tmp_path / "res"
    assert execute(["run", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
    rows = read_rows(out / "results.csv")
    check_schema(rows)
    assert [r[0] for r in rows[1:]] == ["uniform_eba", "alg1", "alg2_approx_C2"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["config"]["trials"] == 20
    assert manifest["config_path"] == str(cfg)


def test_run_with_curve(tmp_path):
    doc = dict(CONFIG, output={"curve": True, "stride": 50})
    out = tmp_path / "res"
    assert execute(["run", "--config", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    rows = read_rows(out / "curve.csv")
    assert rows[0] == ["strategy", "t", "mean_regret", "stderr", "defined_trials"]
    assert len(rows) == 1 + 3 * 8
    assert (out / "curve.svg").read_text().lstrip().startswith("<?xml")


def test_missing_config(tmp_path, capsys):
    assert execute(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert "missing.json" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["run", "--bogus"], ["fly"], []])
def test_usage_errors(argv, capsys):
    assert execute(argv) == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("patch", [
    {"model": {"kind": "nope"}},
    {"strategy": ["ucb"]},
    {"stopping": {"type": "fixed", "n": 0}},
    {"model": {"kind": "explicit", "kernel": {"rows": [[1.0]]}, "seed": {"type": "point", "v": [1.5]}}},
])
def test_config_errors(tmp_path, patch):
    doc = dict(CONFIG, **patch)
    assert execute(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 1


def test_runtime_error_reports_trial(tmp_path, capsys):
    doc = dict(CONFIG, strategy=["uniform_eba"], stopping={"type": "fixed", "n": 8})
    assert execute(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 2
    assert "trial 0" in capsys.readouterr().err


def test_spanner_report(tmp_path, capsys):
    kernel = tmp_path / "U.csv"
    kernel.write_text("# c1,c2\n1,0\n0,1\n0.9,0.9\n")
    assert execute(["spanner", "--kernel", str(kernel), "--mode", "exact"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "indices: 1,2" in out and "absdet: 1.0" in out and "max_coeff: 0.9" in out
    assert execute(["spanner", "--kernel", str(kernel), "--mode", "approx", "--c", "2"]) == 0
    assert execute(["spanner", "--kernel", str(tmp_path / "none.csv")]) == 1


def test_diag(tmp_path, capsys):
    doc = dict(CONFIG, model={"kind": "explicit", "kernel": {"rows": [[1, 0], [0, 1]]},
                              "seed": {"type": "point", "v": [0.2, 0.1]}})
    assert execute(["diag", "--config", str(write(tmp_path, doc))]) == 0
    out = capsys.readouterr().out
    assert "alpha: 2.0" in out and "lambda_min: 0.5" in out


def test_sweep(tmp_path, capsys):
    doc = dict(CONFIG, strategy=["alg2"], sweep={"n": [200, 800]})
    out = tmp_path / "sw"
    assert execute(["sweep", "--config", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    check_schema(rows)
    assert [r[1] for r in rows[1:]] == ["200", "800"]
    assert (out / "sweep.svg").exists()
    assert "slope alg2 d=4 N=16" in capsys.readouterr().out


def test_sweep_over_d(tmp_path):
    doc = {"model": {"kind": "hypercube", "d": 2, "eps": 0.3}, "strategy": ["alg1"],
           "stopping": {"type": "schedule", "n": [100, 200]}, "trials": 5, "sweep": {"d": [2, 3]}}
    out = tmp_path / "sw"
    assert execute(["sweep", "--config", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert [(r[2], r[3]) for r in rows[1:]] == [("2", "4"), ("2", "4"), ("3", "8"), ("3", "8")]


def test_kernel_csv_relative_to_config(tmp_path):
    (tmp_path / "U.csv").write_text("1,0\n0,1\n0.5,0.5\n")
    doc = dict(CONFIG, model={"kind": "explicit", "kernel": {"csv": "U.csv"},
                              "seed": {"type": "box", "lo": [0, 0], "hi": [0.5, 0.5]}})
    assert execute(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 0


def test_block_config(tmp_path):
    doc = {"model": {"kind": "block", "d": 4, "k": 2, "eps": 0.3, "n": 200, "bs": [[1, 1], [1, -1]]},
           "strategy": ["alg1", "alg2"], "trials": 4}
    assert execute(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 0
