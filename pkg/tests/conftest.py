import copy
import json

import pytest

from aprior.decision import MeasurementEconomy
from aprior.kb import build_kb
from aprior.perception import ChannelParams


def three_node_doc() -> dict:
    """Reference KB: Q1{f0=0} with children Q11{f1=0}, Q12{f1=1}; Q2{f0=1}."""
    return {
        "d": 2,
        "alphabet": 3,
        "objects": [
            {"id": 1, "parent": None, "predicate": [[0, 0]]},
            {"id": 11, "parent": 1, "predicate": [[0, 0], [1, 0]]},
            {"id": 12, "parent": 1, "predicate": [[0, 0], [1, 1]]},
            {"id": 2, "parent": None, "predicate": [[0, 1]]},
        ],
        "operations": [
            {"id": 1, "action_tag": "pull", "task": 1, "applicable_objects": [11]},
            {"id": 2, "action_tag": "orient", "task": 1, "applicable_objects": [11, 12]},
            {"id": 3, "action_tag": "approach", "task": 2, "applicable_objects": [12, 2]},
        ],
        "tasks": [
            {"id": 1, "pairs": [[11, 1], [12, 2]]},
            {"id": 2, "pairs": [[2, 3]]},
        ],
        "programs": [
            {"id": 1, "trigger": 11, "operations": [1], "k": 1, "utility": 1.0},
            {"id": 2, "trigger": 12, "operations": [2, 3], "k": 1, "utility": 0.8},
            {"id": 3, "trigger": 2, "operations": [3], "k": 3, "utility": 0.5},
        ],
    }


@pytest.fixture
def doc():
    return three_node_doc()


@pytest.fixture
def kb(doc):
    return build_kb(doc)


@pytest.fixture
def params():
    return ChannelParams(epsilon=0.3, alphabet=3, dim=2)


@pytest.fixture
def noiseless():
    return ChannelParams(epsilon=0.0, alphabet=3, dim=2)


@pytest.fixture
def econ():
    # reference economy for the extremum sweep
    return MeasurementEconomy(value=1.0, cost=0.02, phi0=0.0, n_max=15)


@pytest.fixture
def kb_file(tmp_path, doc):
    path = tmp_path / "kb.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def variant(doc, **overrides):
    out = copy.deepcopy(doc)
    out.update(overrides)
    return out
