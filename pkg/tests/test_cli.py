# Unit tests for the command line front end

import json
import math

import pytest

from analysis.weighted import tail_target
from cli.binsense import main


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_unknown_subcommand_is_usage_error():
    assert main(["explode"]) == 2


def test_fib_base(capsys):
    assert main(["fib-base", "--d", "2"]) == 0
    assert capsys.readouterr().out.strip() == "1.618033989"


def test_quantile_constant(capsys):
    assert main(["quantile", "--dist", "const1", "--s", "10", "--n", "1024"]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_quantile_exponential_json(capsys):
    assert main(["quantile", "--dist", "exp", "--s", "10", "--n", "1024", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["M"] == pytest.approx(-math.log(tail_target(10, 1024)))


def test_quantile_reports_raw_units(capsys):
    assert main(["quantile", "--dist", "uniform12", "--s", "10", "--n", "1024", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["M"] == pytest.approx(4 / 3)
    assert payload["M_raw"] == pytest.approx(2.0)


def test_simulate_inline_rows(capsys):
    assert main(["simulate", "--n", "16", "--d", "2", "--balls", "16", "--trials", "10", "--seed", "7"]) == 0
    out = capsys.readouterr()
    lines = out.out.strip().splitlines()
    assert lines[0] == "trial,balls,gap,phi,psi,gamma,max_load"
    assert len(lines) == 11
    assert "mean gap" in out.err


def test_simulate_is_reproducible(capsys):
    argv = ["simulate", "--n", "16", "--checkpoints", "16,64", "--trials", "3", "--seed", "1"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_simulate_json_is_one_document(capsys):
    assert main(["simulate", "--n", "8", "--balls", "8", "--trials", "2", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["records"]) == 2
    assert payload["summary"][0]["balls"] == 8


def test_simulate_json_carries_nu(capsys):
    assert main(["simulate", "--n", "8", "--balls", "16", "--trials", "2",
                 "--measurements", "gap,nu", "--json"]) == 0
    records = json.loads(capsys.readouterr().out)["records"]
    assert all(record["nu"]["0"] > 0 for record in records)


def test_simulate_config_file(tmp_path, capsys):
    config = tmp_path / "exp.json"
    out = tmp_path / "out.csv"
    config.write_text(json.dumps({
        "process": {"rule": "one_choice"},
        "n": 8,
        "checkpoints": [8, 16],
        "trials": 2,
        "seed": 3,
        "output": {"format": "csv", "path": str(out)},
    }))
    assert main(["simulate", "--config", str(config)]) == 0
    assert len(out.read_text().splitlines()) == 5
    assert "mean gap" in capsys.readouterr().out


def test_simulate_rejects_mixed_flags(tmp_path):
    config = tmp_path / "exp.json"
    config.write_text("{}")
    assert main(["simulate", "--config", str(config), "--n", "16"]) == 2


def test_simulate_rejects_bad_config(tmp_path):
    config = tmp_path / "exp.json"
    config.write_text(json.dumps({"process": {"rule": "greedy", "d": 2}, "n": 16,
                                  "checkpoints": [10, 10], "trials": 1, "seed": 0}))
    assert main(["simulate", "--config", str(config)]) == 2


def test_drift_random_states_pass(capsys):
    assert main(["drift", "--n", "32", "--d", "2", "--states", "random:100", "--seed", "4"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_drift_rejects_unbalanced_state_file(tmp_path):
    states = tmp_path / "states.txt"
    states.write_text("1,0,0,-1\n2,0,0,0\n")
    assert main(["drift", "--states", f"file:{states}"]) == 2


def test_drift_state_file(tmp_path, capsys):
    states = tmp_path / "states.txt"
    states.write_text("1,0,0,-1\n0,0,0,0\n")
    assert main(["drift", "--states", f"file:{states}", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["states"] == 2


def test_drift_manual_alpha_is_flagged(capsys):
    code = main(["drift", "--n", "16", "--states", "random:20", "--alpha", "0.9", "--json"])
    assert code in (0, 1)
    payload = json.loads(capsys.readouterr().out)
    assert payload["manual_alpha"]
    assert "manual α: lemma preconditions not guaranteed" in payload["notes"]


def test_dominance_rejects_reversed_times():
    assert main(["dominance", "--n", "16", "--t-early", "5", "--t-late", "2", "--trials", "10"]) == 2


def test_dominance_small_run(capsys):
    code = main(["dominance", "--n", "16", "--t-early", "1", "--t-late", "4", "--trials", "200", "--json"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["passed"]


def test_dominance_same_time_is_identity(capsys):
    assert main(["dominance", "--n", "8", "--t-early", "2", "--t-late", "2", "--trials", "50", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["worst_margin"] == pytest.approx(payload["band"])


def test_induction_rejects_large_L():
    assert main(["induction", "--n", "64", "--L", "8", "--trials", "1"]) == 2


def test_induction_large_L_counting_only(capsys):
    assert main(["induction", "--n", "64", "--t", "16", "--L", "8", "--trials", "20", "--allow-large-L", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["beta"] is None
    assert payload["violating_trials"] == 0


def test_induction_beta_table(capsys):
    assert main(["induction", "--n", "4096", "--t", "2", "--L", "2", "--trials", "2", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["beta"][0]["beta"] == 1 / 64
    assert payload["closed_form_holds"]
