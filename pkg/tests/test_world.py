import math

import pytest

from aprior.rng import SplitMix64
from aprior.world import (
    OMEGA,
    SchemaError,
    TruthMismatch,
    load_scenario,
    next_stimulus,
    score,
)


def fixed_doc(entries, scoring=None):
    return {"name": "t", "kind": "fixed", "entries": entries, "scoring": scoring or []}


def test_load_fixed_single_entry(kb):
    sc = load_scenario(fixed_doc([{"vector": [0, 0], "truth": 11}]), kb)
    assert len(sc.entries) == 1
    assert sc.entries[0].truth == 11


def test_truth_mismatch(kb):
    with pytest.raises(TruthMismatch):
        load_scenario(fixed_doc([{"vector": [1, 0], "truth": 11}]), kb)
    with pytest.raises(TruthMismatch):
        load_scenario(fixed_doc([{"vector": [0, 0], "truth": OMEGA}]), kb)
    with pytest.raises(TruthMismatch):
        load_scenario(fixed_doc([{"vector": [0, 0], "truth": 999}]), kb)


def test_omega_requires_no_leaf_match(kb):
    sc = load_scenario(fixed_doc([{"vector": [2, 0], "truth": OMEGA}]), kb)
    assert sc.entries[0].truth == OMEGA
    # (0,2) matches internal Q1 but no leaf, so omega is allowed
    sc = load_scenario(fixed_doc([{"vector": [0, 2], "truth": OMEGA}]), kb)
    assert sc.entries[0].truth == OMEGA


def test_schema_errors(kb):
    with pytest.raises(SchemaError):
        load_scenario({"name": "x", "kind": "bogus", "entries": []}, kb)
    with pytest.raises(SchemaError):
        load_scenario(fixed_doc([]), kb)
    with pytest.raises(SchemaError):
        load_scenario(
            {"name": "x", "kind": "categorical",
             "entries": [{"vector": [0, 0], "truth": 11}], "weights": [0.0]}, kb)
    with pytest.raises(SchemaError):
        load_scenario(
            {"name": "x", "kind": "reflex",
             "entries": [{"vector": [0, 0], "truth": 11}], "repeat": 0}, kb)


def test_fixed_schedule_is_modular(kb):
    sc = load_scenario(fixed_doc([
        {"vector": [0, 0], "truth": 11},
        {"vector": [0, 1], "truth": 12},
    ]), kb)
    rng = SplitMix64(0)
    assert next_stimulus(sc, 3, rng) == sc.entries[1]
    assert next_stimulus(sc, 4, rng) == sc.entries[0]


def test_reflex_schedule_repeats_then_switches(kb):
    doc = {
        "name": "r", "kind": "reflex", "repeat": 3,
        "entries": [
            {"vector": [0, 0], "truth": 11},
            {"vector": [0, 1], "truth": 12},
        ],
    }
    sc = load_scenario(doc, kb)
    rng = SplitMix64(0)
    stimuli = [next_stimulus(sc, t, rng) for t in range(6)]
    assert stimuli[:3] == [sc.entries[0]] * 3
    assert stimuli[3:] == [sc.entries[1]] * 3


def test_categorical_schedule_by_weight(kb):
    doc = {
        "name": "c", "kind": "categorical",
        "entries": [
            {"vector": [0, 0], "truth": 11},
            {"vector": [0, 1], "truth": 12},
        ],
        "weights": [1.0, 1.0],
    }
    sc = load_scenario(doc, kb)
    rng = SplitMix64(123)
    n = 10_000
    first = sum(1 for t in range(n) if next_stimulus(sc, t, rng) is sc.entries[0])
    sigma = math.sqrt(n * 0.25)
    assert abs(first - n / 2) < 3 * sigma


def test_generated_stimuli_satisfy_truth_invariant(kb):
    # property re-check across all schedule kinds
    docs = [
        fixed_doc([{"vector": [0, 0], "truth": 11}, {"vector": [2, 0], "truth": OMEGA}]),
        {"name": "c", "kind": "categorical",
         "entries": [{"vector": [0, 1], "truth": 12}, {"vector": [2, 2], "truth": OMEGA}],
         "weights": [2.0, 1.0]},
        {"name": "r", "kind": "reflex", "repeat": 2,
         "entries": [{"vector": [1, 0], "truth": 2}]},
    ]
    rng = SplitMix64(9)
    for doc in docs:
        sc = load_scenario(doc, kb)
        for t in range(50):
            stim = next_stimulus(sc, t, rng)
            if stim.truth == OMEGA:
                assert all(
                    not kb.objects[oid].predicate.matches(stim.vector)
                    for oid in kb.objects if kb.is_leaf(oid)
                )
            else:
                assert kb.objects[stim.truth].predicate.matches(stim.vector)


def test_scenario_generation_deterministic(kb):
    doc = {
        "name": "c", "kind": "categorical",
        "entries": [{"vector": [0, 0], "truth": 11}, {"vector": [0, 1], "truth": 12}],
        "weights": [1.0, 3.0],
    }
    sc = load_scenario(doc, kb)
    rng_a, rng_b = SplitMix64(5), SplitMix64(5)
    a = [next_stimulus(sc, t, rng_a) for t in range(20)]
    b = [next_stimulus(sc, t, rng_b) for t in range(20)]
    assert a == b


def test_score_lookup(kb):
    doc = fixed_doc(
        [{"vector": [0, 0], "truth": 11}],
        scoring=[{"action": "pull", "truth": 11, "value": 1.0}],
    )
    sc = load_scenario(doc, kb)
    assert score(sc, "pull", 11) == 1.0
    assert score(sc, None, 11) == 0.0
    assert score(sc, "pull", 12) == 0.0
    assert score(sc, "orient", 11) == 0.0
