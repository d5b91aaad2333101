"""Minimal-input-subset search over arbitrary monotonic black boxes.

An output record's minimal input subsets (each produces the record, and no
proper subset does) are found purely by re-executing the operator on chosen
subsets. This module implements single-subset minimization, a uniqueness
test, incremental enumeration of further subsets, the derived union /
intersection / impact summaries, and bounded-size exhaustive search.

All loops visit records and choice tuples in ascending (port, local) order,
so every result is reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .errors import BoundViolated, BudgetExhausted, NotProduced
from .operators import ExecutionBudget, OperatorHandle
from .records import Record, RecordId, RecordSet


def _require_produced(op: OperatorHandle, inputs: RecordSet, target: Record, budget) -> None:
    if not op.member(inputs, target, budget):
        raise NotProduced(
            f"operator {op.name} does not produce the target from the given inputs"
        )


def _minimize(op: OperatorHandle, pool: RecordSet, target: Record, budget) -> RecordSet:
    """Greedy shrink: drop each member whose removal keeps the target producible.

    Assumes target ∈ op(pool). One probe per pool member; by monotonicity the
    survivor set is minimal.
    """
    current = pool
    for member in pool:
        candidate = current.minus([member])
        if op.member(candidate, target, budget):
            current = candidate
    return current


def find_any_miset(
    op: OperatorHandle, inputs: RecordSet, target: Record, budget: ExecutionBudget
) -> RecordSet:
    """One minimal producing subset; at most |inputs|+1 true executions."""
    _require_produced(op, inputs, target, budget)
    return _minimize(op, inputs, target, budget)


def is_miset(
    op: OperatorHandle,
    inputs: RecordSet,
    subset: RecordSet,
    target: Record,
    budget: ExecutionBudget,
) -> bool:
    """Definition check: subset produces the target and no single-removal does."""
    if not subset.issubset(inputs):
        return False
    if not op.member(subset, target, budget):
        return False
    return all(
        not op.member(subset.minus([m]), target, budget) for m in subset
    )


def is_unique_miset(
    op: OperatorHandle, inputs: RecordSet, target: Record, budget: ExecutionBudget
) -> tuple[bool, RecordSet]:
    """Whether exactly one minimal subset exists, plus the one found.

    After minimization, a second minimal subset exists iff the target survives
    the removal of some found member from the full input; at most |found|
    probes on top of the minimization.
    """
    found = find_any_miset(op, inputs, target, budget)
    for member in found:
        if op.member(inputs.minus([member]), target, budget):
            return False, found
    return True, found


def find_next_miset(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    found: Sequence[RecordSet],
    budget: ExecutionBudget,
) -> Optional[RecordSet]:
    """A minimal subset distinct from every element of ``found``, or None.

    Walks choice tuples (one member removed from each found subset) in
    canonical order; any input surviving all removals that still produces the
    target contains a new minimal subset. Distinct removal sets are visited
    once: repeated (depth, removed-so-far) states are pruned, which keeps the
    walk polynomial in the number of distinct removal sets rather than the
    raw tuple count.
    """
    if not found:
        return find_any_miset(op, inputs, target, budget)
    choice_lists = [list(m) for m in found]
    found_ids = {m.ids for m in found}
    seen_states: set[tuple[int, frozenset[RecordId]]] = set()

    def walk(depth: int, removed: frozenset[RecordId]) -> Optional[RecordSet]:
        if depth == len(choice_lists):
            candidate = inputs.minus_ids(removed)
            if op.member(candidate, target, budget):
                new = _minimize(op, candidate, target, budget)
                if new.ids not in found_ids:
                    return new
            return None
        for choice in choice_lists[depth]:
            state = (depth + 1, removed | {choice.id})
            if state in seen_states:
                continue
            seen_states.add(state)
            result = walk(depth + 1, state[1])
            if result is not None:
                return result
        return None

    return walk(0, frozenset())


class MISetStream:
    """Incremental enumeration: minimal subsets are yielded as discovered.

    Iterate to receive subsets; afterwards ``exhausted`` says the yielded
    list is provably complete, ``truncated`` that the budget ran out first.
    Stopping early (or a ``k`` cap) leaves both flags False.
    """

    def __init__(
        self,
        op: OperatorHandle,
        inputs: RecordSet,
        target: Record,
        k: Optional[int],
        budget: ExecutionBudget,
    ):
        if k is not None and k < 1:
            raise ValueError("k must be positive")
        self.found: list[RecordSet] = []
        self.exhausted = False
        self.truncated = False
        self.budget = budget
        self._gen = self._run(op, inputs, target, k, budget)

    def _run(self, op, inputs, target, k, budget) -> Iterator[RecordSet]:
        try:
            first = _minimize(op, inputs, target, budget)
            self.found.append(first)
            yield first
            while k is None or len(self.found) < k:
                nxt = find_next_miset(op, inputs, target, self.found, budget)
                if nxt is None:
                    self.exhausted = True
                    return
                self.found.append(nxt)
                yield nxt
        except BudgetExhausted:
            self.truncated = True

    def __iter__(self) -> Iterator[RecordSet]:
        return self._gen


def enumerate_misets(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    k: Optional[int] = None,
    budget: Optional[ExecutionBudget] = None,
) -> MISetStream:
    budget = budget if budget is not None else ExecutionBudget.unlimited()
    _require_produced(op, inputs, target, budget)
    return MISetStream(op, inputs, target, k, budget)


# ---------------------------------------------------------------------------
# Result container shared by all provenance kinds
# ---------------------------------------------------------------------------

KINDS = ("all", "any", "uni", "int", "imp")


@dataclass
class ProvenanceResult:
    kind: str
    misets: tuple[RecordSet, ...] = ()
    records: Optional[RecordSet] = None
    impacts: tuple[tuple[Record, int], ...] = ()
    exact: bool = True
    truncated: bool = False
    requested_k: Optional[int] = None
    budget_spent: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown provenance kind {self.kind!r}")

    def to_json_dict(self) -> dict:
        out: dict = {
            "kind": self.kind,
            "exact": self.exact,
            "truncated": self.truncated,
            "budget_spent": dict(self.budget_spent),
        }
        if self.kind in ("all", "any"):
            out["misets"] = [sorted(str(r.id) for r in m) for m in self.misets]
        if self.kind in ("uni", "int"):
            out["records"] = sorted(str(r.id) for r in (self.records or ()))
        if self.kind == "imp":
            out["impacts"] = [
                {"id": str(r.id), "count": c} for r, c in self.impacts
            ]
        if self.requested_k is not None:
            out["requested_k"] = self.requested_k
        return out


def _impacts_from_misets(misets: Sequence[RecordSet]) -> tuple[tuple[Record, int], ...]:
    counts: dict[RecordId, tuple[Record, int]] = {}
    for m in misets:
        for r in m:
            prev = counts.get(r.id)
            counts[r.id] = (r, (prev[1] if prev else 0) + 1)
    ranked = sorted(counts.values(), key=lambda rc: (-rc[1], rc[0].id))
    return tuple(ranked)


def result_from_misets(
    kind: str,
    misets: Sequence[RecordSet],
    exact: bool,
    truncated: bool,
    budget: ExecutionBudget,
    requested_k: Optional[int] = None,
) -> ProvenanceResult:
    """Shape an enumerated miset list into the requested provenance kind."""
    misets = tuple(misets)
    if kind in ("all", "any"):
        return ProvenanceResult(
            kind, misets=misets, exact=exact, truncated=truncated,
            requested_k=requested_k, budget_spent=budget.spent(),
        )
    if kind == "uni":
        union: dict[RecordId, Record] = {}
        for m in misets:
            for r in m:
                union[r.id] = r
        return ProvenanceResult(
            "uni", misets=misets, records=RecordSet(union.values()),
            exact=exact, truncated=truncated, budget_spent=budget.spent(),
        )
    if kind == "int":
        if misets:
            common = set(misets[0].ids)
            for m in misets[1:]:
                common &= m.ids
            records = misets[0].restrict(common)
        else:
            records = RecordSet()
        return ProvenanceResult(
            "int", misets=misets, records=records,
            exact=exact, truncated=truncated, budget_spent=budget.spent(),
        )
    if kind == "imp":
        return ProvenanceResult(
            "imp", misets=misets, impacts=_impacts_from_misets(misets),
            exact=exact, truncated=truncated, budget_spent=budget.spent(),
        )
    raise ValueError(f"unknown provenance kind {kind!r}")


def compute_p_int(
    op: OperatorHandle, inputs: RecordSet, target: Record, budget: ExecutionBudget
) -> ProvenanceResult:
    """Records whose removal alone loses the target: exactly |inputs| probes
    beyond the production check, and always exact."""
    _require_produced(op, inputs, target, budget)
    essential = [
        r for r in inputs if not op.member(inputs.minus([r]), target, budget)
    ]
    return ProvenanceResult(
        "int", records=RecordSet(essential), exact=True, budget_spent=budget.spent(),
    )


def compute_p_uni(
    op: OperatorHandle, inputs: RecordSet, target: Record, budget: ExecutionBudget
) -> ProvenanceResult:
    """Union of all minimal subsets; exact only if enumeration finished."""
    stream = enumerate_misets(op, inputs, target, None, budget)
    for _ in stream:
        pass
    return result_from_misets(
        "uni", stream.found, exact=stream.exhausted, truncated=stream.truncated, budget=budget,
    )


def compute_p_imp(
    op: OperatorHandle, inputs: RecordSet, target: Record, budget: ExecutionBudget
) -> ProvenanceResult:
    """Per-record membership counts over the enumerated minimal subsets."""
    stream = enumerate_misets(op, inputs, target, None, budget)
    for _ in stream:
        pass
    return result_from_misets(
        "imp", stream.found, exact=stream.exhausted, truncated=stream.truncated, budget=budget,
    )


def enumerate_bounded(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    bound: int,
    budget: ExecutionBudget,
) -> ProvenanceResult:
    """Complete enumeration under a caller-asserted size bound.

    Scans subsets of size 0..bound in canonical order; supersets of found
    subsets are skipped unprobed. Complete whenever every minimal subset
    really is within the bound; a producible target with no bounded subset
    found falsifies that assumption.
    """
    if bound < 1:
        raise ValueError("bound must be positive")
    members = list(inputs)
    found: list[RecordSet] = []
    for size in range(0, min(bound, len(members)) + 1):
        for combo in itertools.combinations(members, size):
            subset = RecordSet(combo)
            if any(m.ids <= subset.ids for m in found):
                continue
            if op.member(subset, target, budget):
                found.append(subset)
    if not found:
        if op.member(inputs, target, budget):
            raise BoundViolated(
                f"target is producible but no minimal subset of size <= {bound} exists"
            )
        raise NotProduced(
            f"operator {op.name} does not produce the target from the given inputs"
        )
    return result_from_misets("all", found, exact=True, truncated=False, budget=budget)


def assert_antichain(misets: Sequence[RecordSet]) -> None:
    """No returned subset may contain another; violations are engine bugs."""
    id_sets = [m.ids for m in misets]
    for a, b in itertools.combinations(id_sets, 2):
        if a <= b or b <= a:
            raise AssertionError(f"nested minimal subsets: {sorted(map(str, a))} vs {sorted(map(str, b))}")
