"""Behavior loop: measure, remember, gate, order, pick at random, act.

Each trial runs Measure -> Memory -> reflex gate -> DoWhile filter ->
Random -> Do, in that fixed order. The recurrence counter feeding the
reflex gate includes the current trial, so a threshold-k program first
becomes eligible on the k-th recognition of its trigger and stays
eligible afterwards. The knowledge base is never written.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import world as world_mod
from .decision import (
    MeasurementEconomy,
    optimal_n,
    order_and_filter,
    phi_program,
    select_random,
)
from .kb import KnowledgeBase, Program, enumerate_tasks, kb_digest
from .perception import (
    UNRECOGNIZED,
    ChannelParams,
    RecognitionOutcome,
    measure,
)
from .rng import SplitMix64, substream


class NonMonotonicTrial(ValueError):
    pass


class UnknownObject(KeyError):
    pass


class IneligibleProgram(ValueError):
    pass


@dataclass
class MemoryEntry:
    t: int
    outcome: RecognitionOutcome
    n: int
    program_id: int | None = None
    phi: float | None = None
    action_tags: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ActionEvent:
    t: int
    program_id: int
    action_tags: tuple[str, ...]
    trigger: int


@dataclass
class AgentState:
    kb: KnowledgeBase
    params: ChannelParams
    econ: MeasurementEconomy
    seed: int
    fixed_n: int | None = None
    memory: list[MemoryEntry] = field(default_factory=list)
    recurrence: dict[int, int] = field(default_factory=dict)
    channel_rng: SplitMix64 | None = None
    selection_rng: SplitMix64 | None = None
    _planned_n: int | None = None

    def __post_init__(self):
        if self.channel_rng is None:
            self.channel_rng = substream(self.seed, "channel")
        if self.selection_rng is None:
            self.selection_rng = substream(self.seed, "selection")


def planned_n(state: AgentState) -> int:
    """Measurement count for each trial, chosen from congenital knowledge.

    Optimizes phi(n) for the reference leaf (smallest-id leaf that pins
    every feature); falls back to 1 when no such leaf exists. Constant
    across an episode, so it is computed once.
    """
    if state.fixed_n is not None:
        return state.fixed_n
    if state._planned_n is None:
        ref = None
        for oid in sorted(state.kb.objects):
            obj = state.kb.objects[oid]
            if state.kb.is_leaf(oid) and len(obj.predicate.constraints) == state.kb.dim:
                ref = oid
                break
        if ref is None:
            state._planned_n = 1
        else:
            rng = substream(state.seed, "plan")
            n_star, _ = optimal_n(state.kb, ref, state.params, state.econ, rng=rng)
            state._planned_n = n_star
    return state._planned_n


def record(state: AgentState, entry: MemoryEntry) -> AgentState:
    expected = state.memory[-1].t + 1 if state.memory else 0
    if entry.t != expected:
        raise NonMonotonicTrial(f"trial {entry.t}, expected {expected}")
    state.memory.append(entry)
    if entry.outcome.status != UNRECOGNIZED:
        node = entry.outcome.node
        state.recurrence[node] = state.recurrence.get(node, 0) + 1
    return state


def recurrence_count(state: AgentState, object_id: int) -> int:
    if object_id not in state.kb.objects:
        raise UnknownObject(object_id)
    return state.recurrence.get(object_id, 0)


def eligible_programs(state: AgentState, outcome: RecognitionOutcome) -> list[Program]:
    """Programs triggered by exactly the recognized node whose reflex gate is open."""
    if outcome.status == UNRECOGNIZED:
        return []
    count = recurrence_count(state, outcome.node)
    return [
        p for p in state.kb.programs_for(outcome.node)
        if p.reflex_threshold <= count
    ]


def do_action(state: AgentState, program: Program, outcome: RecognitionOutcome) -> ActionEvent:
    if program.id not in {p.id for p in eligible_programs(state, outcome)}:
        raise IneligibleProgram(f"program {program.id} not eligible on {outcome.node}")
    tags = tuple(state.kb.operations[pid].action_tag for pid in program.operations)
    t = state.memory[-1].t if state.memory else 0
    return ActionEvent(t, program.id, tags, outcome.node)


def step(state: AgentState, stimulus: tuple[int, ...]) -> dict:
    """One full trial; returns the trial log as a plain dict."""
    t = state.memory[-1].t + 1 if state.memory else 0
    n = planned_n(state)
    result = measure(state.kb, stimulus, n, state.params, state.channel_rng)
    entry = MemoryEntry(t=t, outcome=result.outcome, n=n)
    record(state, entry)

    candidates = eligible_programs(state, result.outcome)
    qualities = [phi_program(p, result.agreement, n, state.econ) for p in candidates]
    ordered = order_and_filter(qualities, state.econ.phi0)
    chosen = select_random(ordered, state.selection_rng)

    action = None
    phi_chosen = None
    if chosen is not None:
        action = do_action(state, state.kb.programs[chosen], result.outcome)
        phi_chosen = next(q.phi for q in ordered if q.program_id == chosen)
        entry.program_id = chosen
        entry.phi = phi_chosen
        entry.action_tags = action.action_tags

    return {
        "t": t,
        "stimulus": list(stimulus),
        "n": n,
        "denoised": list(result.denoised),
        "node": result.outcome.node,
        "depth": result.outcome.depth,
        "status": result.outcome.status,
        "agreement": result.agreement,
        "candidates": [[q.program_id, q.phi] for q in qualities],
        "eligible": [q.program_id for q in ordered],
        "chosen": chosen,
        "phi_chosen": phi_chosen,
        "action": None if action is None else {
            "program": action.program_id,
            "tags": list(action.action_tags),
            "trigger": action.trigger,
        },
    }


@dataclass
class EpisodeLog:
    header: dict
    trials: list[dict]

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True, separators=(",", ":"))]
        lines += [
            json.dumps(trial, sort_keys=True, separators=(",", ":"))
            for trial in self.trials
        ]
        return "\n".join(lines) + "\n"


def run_episode(
    state: AgentState,
    scenario,
    trials: int,
    scenario_rng: SplitMix64 | None = None,
    config: dict | None = None,
    strict: bool = False,
) -> EpisodeLog:
    """Run T sequential trials against a scenario and log everything.

    With strict=True the closure and no-effector-on-unrecognized
    invariants are asserted inline after every trial instead of only
    post hoc by the auditor.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if scenario_rng is None:
        scenario_rng = substream(state.seed, "scenario")

    digest_before = kb_digest(state.kb)
    tasks_before = [[tid, [list(p) for p in pairs]] for tid, pairs in enumerate_tasks(state.kb)]

    trial_logs = []
    for t in range(trials):
        stim = world_mod.next_stimulus(scenario, t, scenario_rng)
        log = step(state, stim.vector)
        log["truth"] = stim.truth
        if log["action"]:
            log["score"] = sum(
                world_mod.score(scenario, tag, stim.truth)
                for tag in log["action"]["tags"]
            )
        else:
            log["score"] = 0.0
        if strict:
            if kb_digest(state.kb) != digest_before:
                raise AssertionError(f"trial {t}: knowledge base digest changed")
            if log["status"] == UNRECOGNIZED and log["action"] is not None:
                raise AssertionError(f"trial {t}: action on unrecognized stimulus")
        trial_logs.append(log)

    header = {
        "seed": state.seed,
        "trials": trials,
        "config": config or {},
        "digest_before": digest_before,
        "digest_after": kb_digest(state.kb),
        "tasks_before": tasks_before,
        "tasks_after": [[tid, [list(p) for p in pairs]] for tid, pairs in enumerate_tasks(state.kb)],
    }
    return EpisodeLog(header, trial_logs)
