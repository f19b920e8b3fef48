import csv
import json
import re
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from approachlab.cli import SIM_SUITES, SUMMARY_SCHEMA, VERIFY_SCHEMA, main

HEADER = ["stage", "mean", "std", "max", "bound"]


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _simulate(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    code = main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("suite", SIM_SUITES)
def test_simulate_every_suite(tmp_path, suite):
    code, out = _simulate(tmp_path, {"suite": suite, "n": 64, "trials": 3})
    assert code in (0, 2)
    summary = json.loads((out / f"{suite}_summary.json").read_text())
    jsonschema.validate(summary, SUMMARY_SCHEMA)
    assert summary["passed"] == (code == 0)
    rows = list(csv.reader((out / f"{suite}_series.csv").open()))
    assert rows[0] == HEADER and len(rows) == 65


def test_regret_matching_defaults_report_bound(tmp_path):
    code, out = _simulate(tmp_path, {"suite": "regret-matching"})
    summary = json.loads((out / "regret-matching_summary.json").read_text())
    assert code == 0 and summary["passed"]
    assert summary["bound"] == pytest.approx(np.sqrt(3 / summary["n"]))
    assert summary["final_metric"] <= summary["bound"]


def test_simulate_zero_stages(tmp_path):
    code, out = _simulate(tmp_path, {"suite": "regret-matching", "n": 0, "trials": 1})
    assert code == 0
    assert (out / "regret-matching_series.csv").read_text().strip() == ",".join(HEADER)


def test_simulate_is_deterministic(tmp_path):
    cfg = {"suite": "calibration", "n": 200, "trials": 4, "seed": 5}
    _, out = _simulate(tmp_path, cfg)
    first = (out / "calibration_series.csv").read_bytes()
    _, out = _simulate(tmp_path, cfg)
    assert (out / "calibration_series.csv").read_bytes() == first


def test_flags_override_config(tmp_path):
    code, out = _simulate(tmp_path, {"suite": "lln", "n": 10}, "--n", "20", "--trials", "5")
    summary = json.loads((out / "lln_summary.json").read_text())
    assert summary["n"] == 20 and summary["trials"] == 5


def test_game_from_file(tmp_path):
    np.save(tmp_path / "rho.npy", np.array([[0.1, 0.9], [0.8, 0.3]]))
    code, out = _simulate(tmp_path, {"suite": "exp-weights", "n": 50, "trials": 2,
                                     "game": {"path": "rho.npy"}})
    assert code in (0, 2)


def test_bound_violation_exit_code(tmp_path):
    # a target the game cannot approach makes the Blackwell bound fail
    cfg = {"suite": "blackwell", "n": 200, "trials": 2,
           "game": {"payoffs": [[[1.0]], [[2.0]]]},
           "target": {"type": "box", "lower": [-1.0], "upper": [0.0]}}
    code, _ = _simulate(tmp_path, cfg)
    assert code == 2


@pytest.mark.parametrize("cfg", [
    {"suite": "regret-matching", "colour": 1},
    {"suite": "regret-matching", "nature": {"type": "iid", "extra": 1}},
    {"suite": "blackwell", "target": {"type": "box", "lower": [0, 0], "upper": [1, 1],
                                      "bogus": 0}},
    {"suite": "calibration", "grid": {"eps": 0.1, "what": 2}},
    {"suite": "nope"},
    {"suite": "regret-matching", "n": -1},
    {"suite": "regret-matching", "nature": {"type": "iid", "probs": [0.5, 0.5]}},
    {"suite": "lln", "target": {"type": "orthant"}},
])
def test_invalid_config_exit_1(tmp_path, cfg):
    code, _ = _simulate(tmp_path, cfg)
    assert code == 1


def test_missing_config_exit_1():
    assert main(["simulate"]) == 1
    assert main(["simulate", "--config", "/nonexistent/cfg.json"]) == 1


def test_verify_lln(tmp_path, capsys):
    code = main(["verify", "lln", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "verify_lln.json").read_text())
    jsonschema.validate(report, VERIFY_SCHEMA)
    assert report["passed"] and report["criteria"][0]["number"] == 1
    assert "[PASS]" in capsys.readouterr().out


def test_verify_stdout_json(capsys):
    assert main(["verify", "oracles", "--trials", "50"]) == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, VERIFY_SCHEMA)


def test_verify_unknown_suite():
    assert main(["verify", "no-such-suite"]) == 1


def test_demo_weak_approach(capsys):
    assert main(["demo", "weak-approach", "--n", "100"]) == 0
    out = capsys.readouterr().out
    value = float(re.search(r"max terminal distance: (\S+)", out).group(1))
    assert value <= 0.01


def test_demo_oakes_dawid(capsys):
    assert main(["demo", "oakes-dawid"]) == 0
    value = float(capsys.readouterr().out.strip().split()[-1])
    assert value >= 0.05


def test_demo_foster(capsys):
    assert main(["demo", "foster", "--eps", "0.05", "--n", "2000"]) == 0
    assert "max" in capsys.readouterr().out


def test_demo_unknown():
    assert main(["demo", "nothing"]) == 1
    assert main(["demo", "weak-approach", "--n", "7"]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "approachlab.cli", "verify", "lln"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    jsonschema.validate(json.loads(proc.stdout), VERIFY_SCHEMA)
