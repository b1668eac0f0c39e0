import json
import os

import pytest

from isatn_sim.cli import cli
from isatn_sim.services.rl_service import load_policy
from isatn_sim.services.scenario_service import dump_scenario
from isatn_sim.services.topology_service import build_topology

from conftest import make_tiny_spec

@pytest.fixture
def scenario_file(tmp_path):
    return dump_scenario(make_tiny_spec(), os.path.join(tmp_path, "tiny.json"))

def test_validate_default_scenario(capsys):
    assert cli(["validate"]) == 0
    assert capsys.readouterr().out.strip() == "OK"

def test_unknown_policy_is_a_usage_error(capsys):
    assert cli(["run", "--policy", "greedy"]) == 2
    assert "usage" in capsys.readouterr().err

def test_invalid_scenario_file(tmp_path, capsys):
    path = dump_scenario(make_tiny_spec(epoch_minutes=7), os.path.join(tmp_path, "bad.json"))
    assert cli(["validate", "--scenario", path]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"]["code"] == "VALIDATION_ERROR"
    assert cli(["run", "--scenario", path, "--policy", "static"]) == 2

def test_mpc_rl_without_policy_file(tmp_path, scenario_file):
    missing = os.path.join(tmp_path, "missing.json")
    assert cli(["run", "--scenario", scenario_file, "--policy", "mpc_rl", "--policy-file", missing]) == 1

def test_run_writes_outputs(tmp_path, scenario_file, capsys):
    out = os.path.join(tmp_path, "out")
    assert cli(["run", "--scenario", scenario_file, "--policy", "static", "--seed", "4", "--out", out]) == 0
    printed = capsys.readouterr().out.split()
    assert os.path.join(out, "kpis.csv") in printed
    for name in ("kpis.csv", "summary.json", "fig_carbon_trace.csv", "fig_energy_breakdown.csv",
                 "fig_latency_event.csv"):
        assert os.path.isfile(os.path.join(out, name))
    with open(os.path.join(out, "summary.json")) as f:
        assert json.load(f)["seed"] == 4

def test_malformed_seed_list(tmp_path, scenario_file):
    assert cli(["compare", "--scenario", scenario_file, "--seeds", "x", "--out", str(tmp_path)]) == 2

def test_beam_width_must_be_positive(tmp_path, scenario_file):
    assert cli(["run", "--scenario", scenario_file, "--policy", "static", "--beam-width", "0",
                "--out", str(tmp_path)]) == 2

def test_train_zero_episodes_writes_a_loadable_policy(tmp_path, scenario_file):
    path = os.path.join(tmp_path, "policy.json")
    assert cli(["train-rl", "--scenario", scenario_file, "--episodes", "0", "--out", path]) == 0
    agent, rl = load_policy(path, build_topology(make_tiny_spec()))
    assert agent.exploration_rate == 0.0
    assert rl.episodes == 2
