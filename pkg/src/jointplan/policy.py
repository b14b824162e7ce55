"""Exact optimal-querying policy over ternary belief states.

A belief assigns each decision-relevant object one of blocked / passable /
unknown. Querying a subset U of unknown objects costs one interaction fee
plus a per-object verification fee; answers arrive per the objects' passable
priors, independently. The value function is solved exactly by memoized
recursion: a belief is terminal (value 0) as soon as every consistent
configuration leads to the same catalog path (or to infeasibility).

Belief indices are base-3 integers over relevant_ids order, digit values
0=blocked, 1=passable, 2=unknown.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .search import INFEASIBLE, DecisionTree

UNKNOWN = 2

DEFAULT_DIMENSION_CAP = 12


class DimensionTooLarge(ValueError):
    """Instance exceeds the solvable belief-space cap."""


class DegeneratePrior(ValueError):
    """A passable prior is outside the open interval (0, 1)."""


class ReanswerError(ValueError):
    """An answer arrived for an object that is already known."""


class UnreachableBelief(ValueError):
    """Belief is inconsistent with the policy's bookkeeping."""


class InconsistentOracle(RuntimeError):
    """An oracle contradicted one of its own earlier answers."""


@dataclass(frozen=True)
class CostParams:
    lambda1: float = 10.0  # interaction cost per query event
    lambda2: float = 1.0   # verification cost per object evaluated

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("costs must be non-negative")
        if self.lambda1 == 0 and self.lambda2 == 0:
            raise ValueError("lambda1 and lambda2 cannot both be zero")


@dataclass(frozen=True)
class BeliefState:
    values: tuple[int, ...]  # one of 0, 1, UNKNOWN per relevant object

    def __post_init__(self):
        for v in self.values:
            if v not in (0, 1, UNKNOWN):
                raise ValueError(f"belief entry {v} not in (0, 1, {UNKNOWN})")

    @classmethod
    def all_unknown(cls, n: int) -> "BeliefState":
        return cls(values=(UNKNOWN,) * n)

    @classmethod
    def from_index(cls, index: int, n: int) -> "BeliefState":
        values = []
        for _ in range(n):
            values.append(index % 3)
            index //= 3
        return cls(values=tuple(values))

    @property
    def index(self) -> int:
        idx = 0
        for i, v in enumerate(self.values):
            idx += v * 3 ** i
        return idx

    @property
    def unknown_positions(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v == UNKNOWN)


@dataclass(frozen=True)
class NextStep:
    kind: str  # "query" | "done" | "infeasible"
    query: tuple[str, ...] = ()
    path_index: int | None = None


@dataclass(frozen=True)
class QueryPolicy:
    tree: DecisionTree
    priors: tuple[float, ...]
    costs: CostParams
    value: dict = field(default_factory=dict)    # belief index -> V(s)
    action: dict = field(default_factory=dict)   # belief index -> tuple of object ids
    outcomes: dict = field(default_factory=dict)  # belief index -> outcome bit mask

    @property
    def root_value(self) -> float:
        n = self.tree.n
        root = BeliefState.all_unknown(n)
        if _is_terminal(self.outcomes[root.index]):
            return 0.0
        return self.value[root.index]


def _outcome_mask(tree: DecisionTree, values: tuple[int, ...], memo: dict) -> int:
    """Bit mask of reachable outcomes: bit 0 infeasible, bit j+1 catalog path j."""
    idx = BeliefState(values).index
    cached = memo.get(idx)
    if cached is not None:
        return cached
    unknown = next((i for i, v in enumerate(values) if v == UNKNOWN), None)
    if unknown is None:
        config = 0
        for i, v in enumerate(values):
            if v == 1:
                config |= 1 << i
        pidx = tree.path_index(config)
        mask = 1 if pidx == INFEASIBLE else 1 << (pidx + 1)
    else:
        lo = list(values)
        lo[unknown] = 0
        hi = list(values)
        hi[unknown] = 1
        mask = (_outcome_mask(tree, tuple(lo), memo)
                | _outcome_mask(tree, tuple(hi), memo))
    memo[idx] = mask
    return mask


def _is_terminal(outcome_mask: int) -> bool:
    return outcome_mask & (outcome_mask - 1) == 0


def _validated_priors(tree: DecisionTree, priors) -> tuple[float, ...]:
    if isinstance(priors, dict):
        ordered = []
        for oid in tree.relevant_ids:
            if oid not in priors:
                raise DegeneratePrior(f"no prior for relevant object '{oid}'")
            ordered.append(float(priors[oid]))
    else:
        ordered = [float(p) for p in priors]
        if len(ordered) != tree.n:
            raise ValueError(f"{len(ordered)} priors for {tree.n} relevant objects")
    for oid, p in zip(tree.relevant_ids, ordered):
        if not 0.0 < p < 1.0:
            raise DegeneratePrior(f"prior {p} for '{oid}' not strictly inside (0, 1)")
    return tuple(ordered)


def solve_policy(tree: DecisionTree, priors, costs: CostParams,
                 cap: int = DEFAULT_DIMENSION_CAP) -> QueryPolicy:
    """Solve the Bellman recursion exactly over all reachable beliefs.

    At each non-terminal belief every non-empty subset of unknown objects is
    evaluated; expectation branches enumerate all answer vectors weighted by
    products of the independent priors. Ties between minimizing subsets
    break toward fewer objects, then lexicographic position order.
    """
    if tree.n > cap:
        raise DimensionTooLarge(f"{tree.n} objects exceeds cap {cap} (3^n beliefs)")
    p = _validated_priors(tree, priors)
    lam1, lam2 = costs.lambda1, costs.lambda2
    outcomes: dict[int, int] = {}
    value: dict[int, float] = {}
    action: dict[int, tuple[str, ...]] = {}

    def mincost(values: tuple[int, ...]) -> float:
        if _is_terminal(_outcome_mask(tree, values, outcomes)):
            return 0.0
        idx = BeliefState(values).index
        if idx in value:
            return value[idx]
        unknowns = [i for i, v in enumerate(values) if v == UNKNOWN]
        best = math.inf
        best_subset: tuple[int, ...] = ()
        for size in range(1, len(unknowns) + 1):
            for subset in itertools.combinations(unknowns, size):
                cost = lam1 + size * lam2
                for bits in itertools.product((0, 1), repeat=size):
                    child = list(values)
                    prob = 1.0
                    for pos, bit in zip(subset, bits):
                        child[pos] = bit
                        prob *= p[pos] if bit else 1.0 - p[pos]
                    cost += prob * mincost(tuple(child))
                if cost < best:
                    best = cost
                    best_subset = subset
        value[idx] = best
        action[idx] = tuple(tree.relevant_ids[i] for i in best_subset)
        return best

    mincost(BeliefState.all_unknown(tree.n).values)
    return QueryPolicy(tree=tree, priors=p, costs=costs,
                       value=value, action=action, outcomes=outcomes)


def next_query(policy: QueryPolicy, belief: BeliefState) -> NextStep:
    """Resolve a belief to the next query subset, the final path, or infeasibility."""
    if len(belief.values) != policy.tree.n:
        raise UnreachableBelief(
            f"belief dimension {len(belief.values)} != tree dimension {policy.tree.n}")
    mask = _outcome_mask(policy.tree, belief.values, policy.outcomes)
    if _is_terminal(mask):
        if mask == 1:
            return NextStep(kind="infeasible")
        return NextStep(kind="done", path_index=mask.bit_length() - 2)
    subset = policy.action.get(belief.index)
    if subset is None:
        raise UnreachableBelief(f"belief index {belief.index} never computed")
    return NextStep(kind="query", query=subset)


def apply_answers(tree: DecisionTree, belief: BeliefState, answers: dict) -> BeliefState:
    """Overwrite unknown entries with answered bits; re-answering is an error."""
    positions = {oid: i for i, oid in enumerate(tree.relevant_ids)}
    values = list(belief.values)
    for oid, bit in answers.items():
        if oid not in positions:
            raise KeyError(f"'{oid}' is not a relevant object")
        pos = positions[oid]
        if values[pos] != UNKNOWN:
            raise ReanswerError(f"object '{oid}' already answered")
        values[pos] = 1 if bit else 0
    return BeliefState(values=tuple(values))


class GroundTruthOracle:
    """Answer oracle backed by a fixed traversability configuration.

    Never contradicts itself across calls; asking about an object absent
    from the configuration is an error.
    """

    def __init__(self, config: dict):
        self.config = {k: bool(v) for k, v in config.items()}
        self._given: dict[str, bool] = {}

    def __call__(self, object_ids) -> dict:
        out = {}
        for oid in object_ids:
            if oid not in self.config:
                raise InconsistentOracle(f"no ground truth for object '{oid}'")
            bit = self.config[oid]
            if oid in self._given and self._given[oid] != bit:
                raise InconsistentOracle(f"oracle flipped answer for '{oid}'")
            self._given[oid] = bit
            out[oid] = bit
        return out


@dataclass(frozen=True)
class ExecutionResult:
    outcome: str  # "path" | "infeasible"
    path_index: int | None
    events: int
    objects_verified: int
    accrued_cost: float
    transcript: tuple  # ((asked ids), {id: bit}) per event
    belief: BeliefState


def execute_queries(policy: QueryPolicy, oracle) -> ExecutionResult:
    """Run the query loop: ask the stored optimal subset until resolved."""
    belief = BeliefState.all_unknown(policy.tree.n)
    events = 0
    objects = 0
    transcript = []
    while True:
        step = next_query(policy, belief)
        if step.kind != "query":
            cost = events * policy.costs.lambda1 + objects * policy.costs.lambda2
            return ExecutionResult(
                outcome="path" if step.kind == "done" else "infeasible",
                path_index=step.path_index, events=events, objects_verified=objects,
                accrued_cost=cost, transcript=tuple(transcript), belief=belief)
        answers = oracle(step.query)
        belief = apply_answers(policy.tree, belief, answers)
        events += 1
        objects += len(step.query)
        transcript.append((step.query, dict(answers)))


def exhaustive_value(tree: DecisionTree, costs: CostParams) -> float:
    """Cost of querying all relevant objects in one event."""
    if tree.n == 0:
        return 0.0
    return costs.lambda1 + tree.n * costs.lambda2


def brute_force_value(tree: DecisionTree, priors, costs: CostParams) -> float:
    """Minimum expected cost over explicitly enumerated adaptive policies.

    A policy picks a non-empty query subset at its root and one continuation
    policy per answer vector; enumeration takes the cartesian product of the
    branch continuations. Independent of the Bellman recursion; n <= 3 only.
    """
    if tree.n > 3:
        raise DimensionTooLarge("brute force enumeration capped at n <= 3")
    p = _validated_priors(tree, priors)
    lam1, lam2 = costs.lambda1, costs.lambda2
    outcomes: dict[int, int] = {}
    memo: dict[int, list[float]] = {}

    def policy_costs(values: tuple[int, ...]) -> list[float]:
        idx = BeliefState(values).index
        if idx in memo:
            return memo[idx]
        if _is_terminal(_outcome_mask(tree, values, outcomes)):
            memo[idx] = [0.0]
            return memo[idx]
        unknowns = [i for i, v in enumerate(values) if v == UNKNOWN]
        all_costs: list[float] = []
        for size in range(1, len(unknowns) + 1):
            for subset in itertools.combinations(unknowns, size):
                branches = []
                for bits in itertools.product((0, 1), repeat=size):
                    child = list(values)
                    prob = 1.0
                    for pos, bit in zip(subset, bits):
                        child[pos] = bit
                        prob *= p[pos] if bit else 1.0 - p[pos]
                    branches.append((prob, policy_costs(tuple(child))))
                base = lam1 + size * lam2
                for combo in itertools.product(*(b[1] for b in branches)):
                    total = base
                    for (prob, _), c in zip(branches, combo):
                        total += prob * c
                    all_costs.append(total)
        memo[idx] = all_costs
        return all_costs

    root = BeliefState.all_unknown(tree.n).values
    if _is_terminal(_outcome_mask(tree, root, outcomes)):
        return 0.0
    return min(policy_costs(root))


def random_instance(rng: np.random.Generator, max_n: int = 3, *,
                    allow_infeasible: bool = True):
    """Random (tree, priors, costs) instance for cross-checking the solver."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, 5))
    low = INFEASIBLE if allow_infeasible else 0
    table = rng.integers(low, m, size=2 ** n).astype(np.int32)
    tree = DecisionTree(relevant_ids=tuple(f"o{i + 1}" for i in range(n)), map=table)
    priors = tuple(float(x) for x in rng.uniform(0.05, 0.95, size=n))
    costs = CostParams(lambda1=float(rng.uniform(1.0, 15.0)),
                       lambda2=float(rng.uniform(0.1, 3.0)))
    return tree, priors, costs


def policy_to_json(policy: QueryPolicy) -> dict:
    """Export the value/action tables keyed by belief index."""
    entries = {}
    for idx, v in sorted(policy.value.items()):
        entries[str(idx)] = {"V": v, "U": list(policy.action[idx])}
    return {"relevant_ids": list(policy.tree.relevant_ids),
            "lambda1": policy.costs.lambda1,
            "lambda2": policy.costs.lambda2,
            "entries": entries}
