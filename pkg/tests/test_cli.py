from __future__ import annotations

import json

import pytest

from qtslab.algebra import FieldMatrix, write_matrix
from qtslab.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_EMPTY, EXIT_FAIL, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def report(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_verify_recording(capsys):
    code, rep = report(capsys, "verify-recording", "--trials", "5", "--n", "2", "--d", "3")
    assert code == EXIT_OK and rep["passed"]
    assert rep["results"]["max_residual"] < 1e-9
    assert "wall_time" not in rep


def test_json_is_deterministic(capsys):
    argv = ["verify-recording", "--trials", "3", "--seed", "4"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    assert a == b


def test_timing_flag(capsys):
    _, rep = report(capsys, "cm-bound", "--timing")
    assert rep["wall_time"] >= 0


def test_rigidity_expectations(capsys, tmp_path):
    f = tmp_path / "m.txt"
    write_matrix(f, FieldMatrix.identity(4, 5))
    assert run(capsys, "rigidity", "--matrix", str(f), "--k", "1", "--h", "1",
               "--expect", "rigid")[0] == EXIT_OK
    code, rep = report(capsys, "rigidity", "--matrix", str(f), "--k", "1", "--h", "2",
                       "--expect", "rigid")
    assert code == EXIT_FAIL and rep["witnesses"]
    assert run(capsys, "rigidity", "--identity", "4", "--k", "1", "--h", "1")[0] == EXIT_EMPTY


def test_rigidity_sampler(capsys):
    code, rep = report(capsys, "rigidity", "--sampler", "uniform", "--size", "2", "--k", "1",
                       "--h", "1", "--trials", "50", "--modulus", "2")
    assert code == EXIT_OK and rep["results"]["trials"] == 50


def test_budget_exit(capsys):
    assert run(capsys, "rigidity", "--identity", "12", "--k", "6", "--h", "6",
               "--budget", "10")[0] == EXIT_BUDGET


def test_config_errors(capsys, tmp_path):
    assert run(capsys, "nope")[0] == EXIT_CONFIG
    assert run(capsys, "rigidity", "--k", "1", "--h", "1")[0] == EXIT_CONFIG
    assert run(capsys, "verify-recording", "--trials", "-1")[0] == EXIT_CONFIG
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    assert run(capsys, "cm-bound", "--config", str(bad))[0] == EXIT_CONFIG


def test_config_file_overrides_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_list": "4,8,16,32"}))
    code, rep = report(capsys, "cm-bound", "--config", str(cfg))
    assert code == EXIT_OK and rep["results"]["n"] == [4, 8, 16, 32]
    # explicit flags win over the config file
    code, rep = report(capsys, "cm-bound", "--config", str(cfg), "--n-list", "8,16")
    assert rep["results"]["n"] == [8, 16]


def test_partition_and_bucket(capsys):
    assert run(capsys, "partition", "--identity", "4", "--k", "4", "--h", "4")[0] == EXIT_OK
    code, rep = report(capsys, "bucket", "--sets", "0,1;2,3;4,5", "--h", "6", "--query", "0,2,4")
    assert code == EXIT_OK
    assert rep["results"]["j"] == 0 and rep["results"]["lam"] == [0]
    assert run(capsys, "bucket", "--sets", "0,1;2,3;4,5", "--h", "6")[0] == EXIT_OK


def test_reductions_and_coloring(capsys):
    assert run(capsys, "reductions", "--trials", "20")[0] == EXIT_OK
    assert run(capsys, "coloring", "--exhaustive", "--grid", "3", "--kmax", "4")[0] == EXIT_OK
    assert run(capsys, "coloring", "--trials", "50", "--grid", "8", "--kmax", "20")[0] == EXIT_OK


def test_coloring_input_file(capsys, tmp_path):
    f = tmp_path / "e.txt"
    f.write_text("4 3\n0 0\n0 1\n1 0\n")
    code, rep = report(capsys, "coloring", "--input", str(f))
    assert code == EXIT_OK and rep["results"]["colors"] <= rep["results"]["bound"]


def test_grover_suites(capsys):
    assert run(capsys, "embedding", "--trials", "5")[0] == EXIT_OK
    assert run(capsys, "bmm-sim", "--trials", "2")[0] == EXIT_OK
    code, rep = report(capsys, "sparse-mv", "--n", "6", "--weight", "2")
    assert code == EXIT_OK and rep["results"]["output_phase_queries"] == 0


def test_ksdw(capsys):
    code, rep = report(capsys, "ksdw", "--n", "16", "--k", "2")
    assert code == EXIT_OK
    assert run(capsys, "ksdw", "--n", "32", "--stacked")[0] == EXIT_OK


def test_bounds_curve_csv(capsys, tmp_path):
    table = tmp_path / "t.csv"
    code, out = run(capsys, "bounds-curve", "--format", "csv", "--table", str(table))
    assert code == EXIT_OK
    assert out.splitlines()[0] == "check,param,value,pass"
    assert table.read_text().splitlines()[0] == "problem,n,S,d,value"


@pytest.mark.parametrize("instance", ["matvec", "matmul"])
def test_cm_bound(capsys, instance, tmp_path):
    out = tmp_path / "r.json"
    code = main(["cm-bound", "--instance", instance, "--out", str(out)])
    rep = json.loads(out.read_text())
    if instance == "matvec":
        assert code == EXIT_OK and all(c["pass"] for c in rep["checks"])
    else:
        assert code == EXIT_EMPTY and len(rep["results"]["values"]) == 3
