import json
import subprocess
import sys

import pytest

from smoothcat.cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, RunConfig, main, normalise, run



def test_check_f1():
    code, out = run(RunConfig("check", site="F1", format="json"))
    assert code == EXIT_OK
    assert json.loads(out)["violations"] == []


def test_fibre_matches_oracle():
    code, out = run(RunConfig("fibre", site="F1", carrier="2", format="json"))
    rep = json.loads(out)
    assert code == EXIT_OK and rep["count"] == rep["oracle_count"] == 4


def test_search_budget_zero():
    code, out = run(RunConfig("search", law="J_below_id", budget=0))
    assert code == EXIT_OK and "exhausted(0)" in out


def test_bad_inputs():
    assert run(RunConfig("check", site="missing.json"))[0] == EXIT_INPUT
    assert run(RunConfig("check", forcing="(bogus, empty)"))[0] == EXIT_INPUT
    assert run(RunConfig("search", law="nope"))[0] == EXIT_INPUT
    assert run(RunConfig("fibre", threads=0))[0] == EXIT_INPUT


def test_cap_exceeded():
    assert run(RunConfig("fibre", carrier="5", cap=3))[0] == EXIT_CAP


def test_site_file(tmp_path):
    from smoothcat.fixtures import fixture_dict

    p = tmp_path / "s.json"
    p.write_text(json.dumps(fixture_dict("F2")))
    code, out = run(RunConfig("census", site=str(p), format="json"))
    assert code == EXIT_OK and json.loads(out)["agrees"]


@pytest.mark.parametrize("cmd", ["check", "fibre", "forcing", "extend", "census", "galois"])
def test_json_round_trip(cmd):
    code, out = run(RunConfig(cmd, site="F1", format="json"))
    rep = json.loads(out)
    assert normalise(rep) == rep
    assert json.dumps(rep, sort_keys=True, indent=2) == out


def test_basechange_on_top_site():
    code, out = run(RunConfig("basechange", site="F3", format="json"))
    rep = json.loads(out)
    assert code == EXIT_OK and rep["initial_lift_matches"] == rep["initial_lift_scans"]


def test_main_parses_args(capsys):
    assert main(["search", "J_below_id", "--budget", "0"]) == EXIT_OK
    assert "exhausted(0)" in capsys.readouterr().out
    assert main(["frobnicate"]) == EXIT_INPUT


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "smoothcat.cli", "check", "--site", "F3"], capture_output=True, text=True)
    assert proc.returncode == 0 and "violations: []" in proc.stdout
