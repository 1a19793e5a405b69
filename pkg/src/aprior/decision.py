"""Quality functionals and measurement-count optimization.

Two functionals live here. The measurement functional
phi(n) = V * (1 - Perr(n)) - c * n trades recognition accuracy against
measurement cost and can peak at an interior n. The program functional
phi = U * agreement - c * n scores candidate behavior programs from the
agent's own observations at decision time.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from .kb import KnowledgeBase, Program
from .perception import ChannelParams, InvalidCount
from .rng import SplitMix64

EXACT = "exact"
MONTE_CARLO = "mc"
AUTO = "auto"

# above this many channel sequences, auto mode falls back to Monte Carlo
EXACT_LIMIT = 10 ** 6
MC_SAMPLES = 10 ** 5


class NotLeaf(ValueError):
    pass


class UnderconstrainedLeaf(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementEconomy:
    value: float  # payoff of acting on a correct recognition
    cost: float  # per measurement
    phi0: float  # DoWhile threshold (strict)
    n_max: int

    def __post_init__(self):
        if self.value < 0 or self.cost < 0:
            raise ValueError("value and cost must be >= 0")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass(frozen=True)
class ProgramQuality:
    program_id: int
    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")


def resolve_mode(n: int, params: ChannelParams, mode: str = AUTO) -> str:
    if mode == AUTO:
        return EXACT if params.alphabet ** n <= EXACT_LIMIT else MONTE_CARLO
    if mode in (EXACT, MONTE_CARLO):
        return mode
    raise ValueError(f"unknown mode {mode!r}")


@functools.lru_cache(maxsize=4096)
def _exact_feature_accuracy(n: int, eps: float, a: int, true_symbol: int) -> float:
    # sum over count vectors (c_0..c_{a-1}) of n observations; equivalent
    # to enumerating all a^n sequences but polynomial in n
    p_true = 1.0 - eps
    p_other = eps / (a - 1)

    def probs(counts):
        p = math.factorial(n)
        for c in counts:
            p //= math.factorial(c)
        weight = float(p)
        for sym, c in enumerate(counts):
            weight *= (p_true if sym == true_symbol else p_other) ** c
        return weight

    total = 0.0
    def rec(sym, remaining, counts):
        nonlocal total
        if sym == a - 1:
            counts.append(remaining)
            m = max(counts)
            if counts.index(m) == true_symbol:  # lowest-symbol tie-break
                total += probs(counts)
            counts.pop()
            return
        for c in range(remaining + 1):
            counts.append(c)
            rec(sym + 1, remaining - c, counts)
            counts.pop()

    rec(0, n, [])
    return total


def _mc_feature_accuracy(
    n: int, params: ChannelParams, true_symbol: int, rng: SplitMix64, samples: int
) -> float:
    # draw pattern matches perception.corrupt_symbol: one corruption word,
    # then one rejection-sampled replacement when corrupted
    a = params.alphabet
    threshold = int(params.epsilon * (1 << 64))
    next_u64 = rng.next_u64
    randbelow = rng.randbelow
    hits = 0
    for _ in range(samples):
        counts = [0] * a
        for _ in range(n):
            if next_u64() >= threshold:
                s = true_symbol
            else:
                j = randbelow(a - 1)
                s = j if j < true_symbol else j + 1
            counts[s] += 1
        if counts.index(max(counts)) == true_symbol:
            hits += 1
    return hits / samples


def feature_accuracy(
    n: int,
    params: ChannelParams,
    true_symbol: int,
    mode: str = AUTO,
    rng: SplitMix64 | None = None,
    samples: int = MC_SAMPLES,
) -> float:
    """P(majority-folded feature equals the true symbol) after n draws."""
    if n < 1:
        raise InvalidCount("n must be >= 1")
    if not 0 <= true_symbol < params.alphabet:
        raise ValueError("true_symbol outside alphabet")
    if params.epsilon == 0.0:
        return 1.0
    used = resolve_mode(n, params, mode)
    if used == EXACT:
        return _exact_feature_accuracy(n, params.epsilon, params.alphabet, true_symbol)
    if rng is None:
        raise ValueError("Monte Carlo mode requires an rng")
    return _mc_feature_accuracy(n, params, true_symbol, rng, samples)


def recognition_error(
    kb: KnowledgeBase,
    node: int,
    n: int,
    params: ChannelParams,
    mode: str = AUTO,
    rng: SplitMix64 | None = None,
) -> float:
    """Perr(n) = 1 - prod over features of that feature's accuracy.

    Requires a leaf whose predicate pins every feature, so the true
    symbol per feature is known.
    """
    if node not in kb.objects or not kb.is_leaf(node):
        raise NotLeaf(f"object {node} is not a leaf")
    constraints = kb.objects[node].predicate.as_dict()
    if len(constraints) != kb.dim:
        raise UnderconstrainedLeaf(f"leaf {node} does not constrain every feature")
    p_ok = 1.0
    for i in range(kb.dim):
        p_ok *= feature_accuracy(n, params, constraints[i], mode=mode, rng=rng)
    return 1.0 - p_ok


def phi_measure(n: int, perr_n: float, econ: MeasurementEconomy) -> float:
    if not 0.0 <= perr_n <= 1.0:
        raise ValueError("perr must be a probability")
    return econ.value * (1.0 - perr_n) - econ.cost * n


@dataclass(frozen=True)
class SweepRow:
    n: int
    perr: float
    phi: float
    is_argmax: bool


def optimal_n(
    kb: KnowledgeBase,
    node: int,
    params: ChannelParams,
    econ: MeasurementEconomy,
    mode: str = AUTO,
    rng: SplitMix64 | None = None,
    return_sweep: bool = False,
):
    """Argmax of phi_measure over n in [1, n_max]; ties to the smallest n."""
    rows = []
    best_n, best_phi = None, None
    for n in range(1, econ.n_max + 1):
        perr = recognition_error(kb, node, n, params, mode=mode, rng=rng)
        phi = phi_measure(n, perr, econ)
        rows.append((n, perr, phi))
        if best_phi is None or phi > best_phi:
            best_n, best_phi = n, phi
    if return_sweep:
        sweep = [SweepRow(n, perr, phi, n == best_n) for n, perr, phi in rows]
        return (best_n, best_phi), sweep
    return best_n, best_phi


def phi_program(
    program: Program, agreement: float, n: int, econ: MeasurementEconomy
) -> ProgramQuality:
    if not 0.0 <= agreement <= 1.0:
        raise ValueError("agreement must be in [0, 1]")
    return ProgramQuality(program.id, program.base_utility * agreement - econ.cost * n)


def order_and_filter(qualities, phi0: float) -> list[ProgramQuality]:
    """Keep phi strictly above phi0, sort by descending phi then ascending id."""
    kept = [q for q in qualities if q.phi > phi0]
    return sorted(kept, key=lambda q: (-q.phi, q.program_id))


def select_random(eligible, rng: SplitMix64):
    """Uniform pick over the eligible list; None when empty."""
    if not eligible:
        return None
    return eligible[rng.randbelow(len(eligible))].program_id
