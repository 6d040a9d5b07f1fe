import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from vmlab import fixtures, mdp
from vmlab.cli import EXIT_INPUT, EXIT_MISMATCH, EXIT_OK, main

MODELS = Path(__file__).resolve().parent.parent / "models"


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    assert capsys.readouterr().out.split() == fixtures.fixture_names()


def test_verify_matching_fixture(capsys):
    assert main(["verify", "ramp-point-mass"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["matched"] is True and doc["fixture"] == "ramp-point-mass"


def test_verify_alias_gives_same_report(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "example-5-1", "--out", str(a)]) == EXIT_OK
    assert main(["verify", "ramp-point-mass", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_verify_mismatch_exit_code(capsys):
    assert main(["verify", "oscillating-density-windows"]) == EXIT_MISMATCH
    assert "integral_liminf" in capsys.readouterr().err


def test_verify_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["verify", "alternating-bumps", "--format", "csv", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["schema_version", "fixture", "key", "expected", "measured", "tolerance", "matched"]
    assert len(rows) > 1 and all(r[1] == "alternating-bumps" for r in rows[1:])


def test_unknown_fixture_is_input_error(capsys):
    assert main(["verify", "no-such"]) == EXIT_INPUT
    assert "unknown fixture" in capsys.readouterr().err


def test_random_suite_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["random-suite", "--seed", "3", "--trials", "5", "--out", str(a)]) == EXIT_OK
    assert main(["random-suite", "--seed", "3", "--trials", "5", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["bugs"] == 0 and doc["trials"] == 5


def test_random_suite_bad_arguments():
    assert main(["random-suite", "--trials", "0"]) == EXIT_INPUT
    assert main(["random-suite", "--seed", "-1"]) == EXIT_INPUT


def test_solve_mdp_with_oracle(capsys):
    assert main(["solve-mdp", str(MODELS / "absorbing_indicator.json"), "--oracle"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["w_star"] == 0.0 and doc["oracle"]["oracle_acoe_gap"] == 0.0
    assert doc["residuals"]["acoe_max_gap"] == 0.0
    assert {v["check_id"] for v in doc["assumption_verdicts"]} == {"assumption_B", "assumption_LEC", "average_cost_chain"}


def test_solve_mdp_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["solve-mdp", str(MODELS / "absorbing_tagged.json"), "--format", "csv", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0][:4] == ["schema_version", "state", "w_star", "u"]
    assert len(rows) - 1 == len(mdp.load_model(MODELS / "absorbing_tagged.json").states)


def test_solve_mdp_random_model_agrees_with_oracle(tmp_path):
    model = mdp.random_unichain_model(np.random.default_rng(0), 5, 3)
    path = tmp_path / "m.json"
    path.write_text(mdp.dump_model(model))
    assert main(["solve-mdp", str(path), "--oracle", "--out", str(tmp_path / "o.json")]) == EXIT_OK


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps({"states": [0, 1], "metric": "euclidean", "actions": ["a"], "cost": [[0], [0]], "kernel": [[[0.5, 0.4]], [[0, 1]]]}),
    ],
)
def test_solve_mdp_invalid_model(tmp_path, content, capsys):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert main(["solve-mdp", str(path)]) == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_solve_mdp_bad_discounts():
    assert main(["solve-mdp", str(MODELS / "absorbing_indicator.json"), "--alphas", "0.9,0.5"]) == EXIT_INPUT
    assert main(["solve-mdp", str(MODELS / "absorbing_indicator.json"), "--alphas", "x"]) == EXIT_INPUT


def test_module_entry_point_exit_codes():
    run = lambda *a: subprocess.run([sys.executable, "-m", "vmlab", *a], capture_output=True, text=True)
    assert run("verify", "no-such").returncode == EXIT_INPUT
    assert run("list").returncode == EXIT_OK
    assert run("bogus-command").returncode == 2
