"""Sampling-based classification of black-box operators.

Shape and monotonicity unlock the fast provenance paths, so when nothing is
declared we probe for them: random nested pairs for monotonicity, random
subsets versus singleton unions for record-additivity, and a pairwise
interaction scan for grouped behavior. Violations come with concrete
replayable counterexamples; consistency is only ever reported as
"consistent with N trials", never as proof, and the default assumption
stays arbitrary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .operators import ExecutionBudget, OperatorHandle, PropertyClass
from .records import Record, RecordId, RecordSet

SIZE_CAP = 8
DEFAULT_TRIALS = 32


@dataclass
class CheckOutcome:
    verdict: str  # "consistent" | "violated"
    trials: int
    counterexample: Optional[dict] = None

    def __post_init__(self):
        if self.verdict == "violated":
            assert self.counterexample is not None

    def to_json_dict(self) -> dict:
        out: dict = {"verdict": self.verdict, "trials": self.trials}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


@dataclass
class EvidenceReport:
    seed: int
    monotone: CheckOutcome
    additive: CheckOutcome
    singleton_max: int
    shape: PropertyClass = PropertyClass.ARBITRARY
    heuristic: bool = False
    partition: Optional[list[list[str]]] = None

    def to_json_dict(self) -> dict:
        out: dict = {
            "seed": self.seed,
            "monotone": self.monotone.to_json_dict(),
            "additive": self.additive.to_json_dict(),
            "singleton_max": self.singleton_max,
            "shape": self.shape.value,
            "heuristic": self.heuristic,
        }
        if self.partition is not None:
            out["partition"] = self.partition
        return out


def _sample_subset(rng: random.Random, members: list[Record], size: int) -> RecordSet:
    return RecordSet(rng.sample(members, size))


def _digests(op: OperatorHandle, subset: RecordSet, budget: ExecutionBudget) -> frozenset[str]:
    return op.apply_counted(subset, budget).value_digests


def _ids(records: RecordSet) -> list[str]:
    return [str(r.id) for r in records]


def check_monotonicity_sample(
    op: OperatorHandle,
    pool: RecordSet,
    trials: int,
    seed: int,
    budget: ExecutionBudget,
) -> CheckOutcome:
    """Nested random pairs: adding records must never lose an output value."""
    rng = random.Random(seed)
    members = list(pool)
    cap = min(len(members), SIZE_CAP)
    for _ in range(trials):
        outer_size = rng.randint(1, cap)
        outer = _sample_subset(rng, members, outer_size)
        inner = _sample_subset(rng, list(outer), rng.randint(1, outer_size))
        out_inner = _digests(op, inner, budget)
        out_outer = _digests(op, outer, budget)
        if not out_inner <= out_outer:
            return CheckOutcome(
                "violated",
                trials,
                {
                    "check": "monotonicity",
                    "smaller": _ids(inner),
                    "larger": _ids(outer),
                    "lost_output_digests": sorted(out_inner - out_outer),
                },
            )
    return CheckOutcome("consistent", trials)


def check_additivity(
    op: OperatorHandle,
    pool: RecordSet,
    trials: int,
    seed: int,
    budget: ExecutionBudget,
) -> CheckOutcome:
    """Random subsets versus the union of their singleton applications."""
    rng = random.Random(seed)
    members = list(pool)
    cap = min(len(members), SIZE_CAP)
    for _ in range(trials):
        subset = _sample_subset(rng, members, rng.randint(1, cap))
        whole = _digests(op, subset, budget)
        union: set[str] = set()
        for r in subset:
            union |= _digests(op, RecordSet([r]), budget)
        if whole != union:
            return CheckOutcome(
                "violated",
                trials,
                {
                    "check": "additivity",
                    "inputs": _ids(subset),
                    "whole_output_digests": sorted(whole),
                    "singleton_union_digests": sorted(union),
                },
            )
    return CheckOutcome("consistent", trials)


def _singleton_max(op: OperatorHandle, pool: RecordSet, seed: int, budget) -> int:
    members = list(pool)
    if len(members) > 32:
        members = random.Random(seed).sample(members, 32)
    sizes = [len(op.apply_counted(RecordSet([r]), budget)) for r in members]
    return max(sizes, default=0)


def _interaction_partition(
    op: OperatorHandle, pool: RecordSet, budget: ExecutionBudget
) -> list[list[Record]]:
    """Group pool records that interact: a pair interacts when running them
    together differs from the union of running them alone."""
    members = list(pool)
    parent = {r.id: r.id for r in members}

    def find(x: RecordId) -> RecordId:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    single = {r.id: _digests(op, RecordSet([r]), budget) for r in members}
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            pair = _digests(op, RecordSet([a, b]), budget)
            if pair != single[a.id] | single[b.id]:
                parent[find(a.id)] = find(b.id)
    groups: dict[RecordId, list[Record]] = {}
    for r in members:
        groups.setdefault(find(r.id), []).append(r)
    return sorted(groups.values(), key=lambda g: g[0].id)


def _partition_covers_trials(
    op: OperatorHandle,
    pool: RecordSet,
    parts: list[list[Record]],
    trials: int,
    seed: int,
    budget: ExecutionBudget,
) -> bool:
    """A grouped operator acts independently per part with at most one output
    each; check that story against fresh random subsets."""
    for part in parts:
        if len(op.apply_counted(RecordSet(part), budget)) > 1:
            return False
    rng = random.Random(seed)
    members = list(pool)
    cap = min(len(members), SIZE_CAP)
    part_ids = [frozenset(r.id for r in part) for part in parts]
    for _ in range(trials):
        subset = _sample_subset(rng, members, rng.randint(1, cap))
        whole = _digests(op, subset, budget)
        union: set[str] = set()
        for ids in part_ids:
            piece = subset.restrict(ids)
            got = _digests(op, piece, budget) if len(piece) else frozenset()
            if len(got) > 1:
                return False
            union |= got
        if whole != union:
            return False
    return True


def infer_properties(
    op: OperatorHandle,
    pool: RecordSet,
    trials: int = DEFAULT_TRIALS,
    seed: int = 1,
    budget: Optional[ExecutionBudget] = None,
) -> tuple[PropertyClass, EvidenceReport]:
    """Classify an operator's shape from sampled behavior.

    Additive with singleton outputs of at most one record: one-to-one.
    Additive otherwise: one-to-many. Non-additive but consistent with a
    multi-part interaction partition: many-to-one, tagged heuristic (the
    grouped story is unverifiable by sampling alone and never changes
    algorithm routing). Everything else, including any monotonicity
    violation, stays arbitrary.
    """
    budget = budget if budget is not None else ExecutionBudget.unlimited()
    if len(pool) == 0:
        raise ValueError("property inference needs a nonempty sample pool")
    monotone = check_monotonicity_sample(op, pool, trials, seed * 2 + 1, budget)
    additive = check_additivity(op, pool, trials, seed * 2 + 2, budget)
    singleton_max = _singleton_max(op, pool, seed * 2 + 3, budget)
    report = EvidenceReport(seed, monotone, additive, singleton_max)

    if monotone.verdict == "violated":
        report.shape = PropertyClass.ARBITRARY
        return report.shape, report

    if additive.verdict == "consistent":
        report.shape = (
            PropertyClass.ONE_TO_ONE if singleton_max <= 1 else PropertyClass.ONE_TO_MANY
        )
        return report.shape, report

    parts = _interaction_partition(op, pool, budget)
    if len(parts) >= 2 and _partition_covers_trials(
        op, pool, parts, trials, seed * 2 + 4, budget
    ):
        report.shape = PropertyClass.MANY_TO_ONE
        report.heuristic = True
        report.partition = [[str(r.id) for r in part] for part in parts]
        return report.shape, report

    report.shape = PropertyClass.ARBITRARY
    return report.shape, report


def replay_counterexample(
    op: OperatorHandle, pool: RecordSet, counterexample: dict
) -> bool:
    """Re-run a recorded violation; True when it still violates."""
    budget = ExecutionBudget.unlimited()
    if counterexample["check"] == "monotonicity":
        smaller = pool.restrict(RecordId.parse(t) for t in counterexample["smaller"])
        larger = pool.restrict(RecordId.parse(t) for t in counterexample["larger"])
        return not _digests(op, smaller, budget) <= _digests(op, larger, budget)
    if counterexample["check"] == "additivity":
        subset = pool.restrict(RecordId.parse(t) for t in counterexample["inputs"])
        whole = _digests(op, subset, budget)
        union: set[str] = set()
        for r in subset:
            union |= _digests(op, RecordSet([r]), budget)
        return whole != union
    raise ValueError(f"unknown counterexample check {counterexample['check']!r}")
