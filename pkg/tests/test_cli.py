"""Command line interface: exit codes, determinism, outputs, faults."""

import json
import os

import pytest

from higgslab.cli import main
from higgslab.scenarios import BUILTIN, ScenarioError, load, validate


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in BUILTIN:
        assert name in out


def test_unknown_scenario_is_config_error(tmp_path):
    code = main(["run", "--scenario", "no-such-scenario",
                 "--out", str(tmp_path)])
    assert code == 2


def test_negative_tolerance_is_config_error(tmp_path):
    code = main(["run", "--scenario", "rank1-tstar-jacobian",
                 "--out", str(tmp_path), "--tol-override", "tol_hym=-1"])
    assert code == 2


def test_empty_tasks_is_config_error(tmp_path):
    import copy
    scn = copy.deepcopy(BUILTIN["rank1-tstar-jacobian"])
    scn["tasks"] = []
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(scn))
    assert main(["run", "--scenario", str(path), "--out",
                 str(tmp_path / "out")]) == 2


def test_schema_validation_errors():
    with pytest.raises(ScenarioError):
        validate({"schema_version": 2})
    with pytest.raises(ScenarioError):
        load("/nonexistent/path.json")
    import copy
    bad = copy.deepcopy(BUILTIN["rank1-tstar-jacobian"])
    bad["geometry"]["grid"] = 13
    with pytest.raises(ScenarioError):
        validate(bad)


def test_run_writes_report_and_figures(tmp_path):
    out = tmp_path / "run1"
    code = main(["run", "--scenario", "rank1-tstar-jacobian",
                 "--out", str(out)])
    assert code == 0
    assert (out / "report.json").exists()
    assert (out / "convergence_center.csv").exists()
    assert (out / "convergence_center.png").exists()
    assert (out / "G.csv").exists()
    assert (out / "R.csv").exists()
    assert (out / "pi.csv").exists()
    assert (out / "verify_rows.png").exists()
    assert (out / "identity_orders.png").exists()
    doc = json.loads((out / "report.json").read_text())
    assert doc["status"] == "ok"
    assert doc["lambda"] == 0.0
    assert all(r["passed"] for r in doc["verify"])


def test_report_determinism(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = main(["run", "--scenario", "rank1-tstar-jacobian",
                     "--out", str(out), "--no-figures"])
        assert code == 0
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]


def test_fault_injection_fails_adjoint_row(tmp_path):
    out = tmp_path / "fault"
    code = main(["verify", "--scenario", "rank1-tstar-jacobian",
                 "--out", str(out), "--no-figures",
                 "--inject-fault", "dstar0-sign"])
    assert code == 1
    doc = json.loads((out / "report.json").read_text())
    failed = [r for r in doc["verify"] if not r["passed"]]
    assert any(r["anchor"] == "eq:dstar0" for r in failed)
