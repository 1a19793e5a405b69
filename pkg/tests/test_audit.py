import copy
import json

import pytest

from aprior.agent import AgentState, run_episode
from aprior.audit import (
    MalformedLog,
    assert_closure,
    assert_reflex,
    assert_statement1,
    audit_log,
    parse_log,
)
from aprior.decision import MeasurementEconomy
from aprior.perception import ChannelParams
from aprior.world import load_scenario


def make_log(kb, seed=7, trials=40, epsilon=0.3):
    scenario = load_scenario({
        "name": "mix", "kind": "fixed",
        "entries": [
            {"vector": [0, 0], "truth": 11},
            {"vector": [2, 0], "truth": "omega"},
            {"vector": [1, 0], "truth": 2},
            {"vector": [0, 2], "truth": "omega"},
        ],
        "scoring": [],
    }, kb)
    state = AgentState(
        kb=kb,
        params=ChannelParams(epsilon=epsilon, alphabet=kb.alphabet, dim=kb.dim),
        econ=MeasurementEconomy(value=1.0, cost=0.0, phi0=0.0, n_max=9),
        seed=seed, fixed_n=3,
    )
    episode = run_episode(state, scenario, trials)
    return parse_log(episode.to_jsonl())


def test_honest_episode_passes_everything(kb):
    header, trials = make_log(kb)
    report = audit_log(header, trials, kb)
    assert report.passed
    assert report.trials == 40
    assert report.unrecognized_trials > 0


def test_closure_fails_on_tampered_digest(kb):
    header, trials = make_log(kb)
    tampered = dict(header, digest_after=header["digest_after"] ^ 1)
    result = assert_closure(tampered, trials)
    assert not result.passed
    assert "digest" in result.detail


def test_closure_fails_on_tampered_tasks(kb):
    header, trials = make_log(kb)
    tampered = dict(header, tasks_after=header["tasks_after"] + [[99, [[1, 1]]]])
    assert not assert_closure(tampered, trials).passed


def test_statement1_fails_on_action_on_unrecognized(kb):
    header, trials = make_log(kb)
    tampered = copy.deepcopy(trials)
    victim = next(t for t in tampered if t["status"] == "unrecognized")
    victim["action"] = {"program": 1, "tags": ["pull"], "trigger": 11}
    result = assert_statement1(header, tampered, kb)
    assert not result.passed
    assert result.violating_trial == victim["t"]


def test_statement1_fails_on_nonlocal_trigger(kb):
    # a Q11 program firing on a trial whose outcome stopped at Q1
    header, trials = make_log(kb)
    tampered = copy.deepcopy(trials)
    victim = next(t for t in tampered if t["status"] != "unrecognized")
    victim["status"] = "partial"
    victim["node"] = 1
    victim["action"] = {"program": 1, "tags": ["pull"], "trigger": 11}
    result = assert_statement1(header, tampered, kb)
    assert not result.passed
    assert result.violating_trial == victim["t"]


def test_statement1_fails_on_foreign_program(kb):
    header, trials = make_log(kb)
    tampered = copy.deepcopy(trials)
    victim = next(t for t in tampered if t["action"] is not None)
    victim["action"]["program"] = 999
    assert not assert_statement1(header, tampered, kb).passed


def test_reflex_pass_and_thresholds(kb):
    header, trials = make_log(kb, epsilon=0.0)
    # k=3 program on Q2 and k=1 program on Q11 both behave in a clean run
    assert assert_reflex(trials, kb.programs[3]).passed
    assert assert_reflex(trials, kb.programs[1]).passed


def test_reflex_fails_on_early_fire(kb):
    header, trials = make_log(kb, epsilon=0.0)
    tampered = copy.deepcopy(trials)
    first_q2 = next(t for t in tampered if t["node"] == 2)
    first_q2["action"] = {"program": 3, "tags": ["approach"], "trigger": 2}
    result = assert_reflex(tampered, kb.programs[3])
    assert not result.passed
    assert result.violating_trial == first_q2["t"]


def test_malformed_logs():
    with pytest.raises(MalformedLog):
        parse_log("")
    with pytest.raises(MalformedLog):
        parse_log("{not json\n")
    with pytest.raises(MalformedLog):
        parse_log(json.dumps({"seed": 1}) + "\n")  # header missing keys
    with pytest.raises(MalformedLog):
        # header only, no trials
        parse_log(json.dumps({
            "seed": 1, "trials": 0, "digest_before": 1, "digest_after": 1,
            "tasks_before": [], "tasks_after": [],
        }) + "\n")


def test_report_json_shape(kb):
    header, trials = make_log(kb)
    report = audit_log(header, trials, kb)
    doc = json.loads(report.to_json())
    assert doc["passed"] is True
    assert {c["name"] for c in doc["checks"]} >= {"closure", "statement1"}
    assert doc["totals"]["trials"] == 40
