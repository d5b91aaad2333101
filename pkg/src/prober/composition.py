"""Provenance across operator chains without re-executing real operators.

Once each stage's complete per-record minimal-subset sets are stored, chain
membership questions ("would this final record survive on this source
subset?") reduce to set checks over the stored sets. That makes the whole
search machinery reusable on a virtual composite operator at zero real
execution cost. Cheaper shape-specific shortcut rules exist for some stage
combinations; where a shortcut is only an over- or under-approximation, the
result says so explicitly and nothing ever upgrades a bound to exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .engine import ProvenanceResult, enumerate_misets, result_from_misets
from .errors import InexactProvenance, UnsupportedCombination
from .operators import ExecutionBudget, OperatorHandle, PropertyClass
from .records import Record, RecordId, RecordSet

_ADDITIVE = (PropertyClass.ONE_TO_ONE, PropertyClass.ONE_TO_MANY)


def is_additive_shape(shape: Optional[PropertyClass]) -> bool:
    return shape in _ADDITIVE


@dataclass
class StoredProvenance:
    """One stage's complete minimal-subset sets, output record by output record."""

    inputs: RecordSet
    outputs: RecordSet
    misets_by_digest: dict[str, tuple[RecordSet, ...]]
    exact: bool = True

    @classmethod
    def build(
        cls,
        op: OperatorHandle,
        inputs: RecordSet,
        budget: Optional[ExecutionBudget] = None,
    ) -> "StoredProvenance":
        """Enumerate every output's minimal subsets by real execution.

        This is the one-time cost paid up front; composition afterwards is
        free of real executions.
        """
        budget = budget if budget is not None else ExecutionBudget.unlimited()
        outputs = op.apply_counted(inputs, budget)
        table: dict[str, tuple[RecordSet, ...]] = {}
        exact = True
        for r in outputs:
            stream = enumerate_misets(op, inputs, r, None, budget)
            table[r.digest] = tuple(stream)
            exact = exact and stream.exhausted
        return cls(inputs, outputs, table, exact)

    def misets_for(self, target: Record) -> tuple[RecordSet, ...]:
        return self.misets_by_digest.get(target.digest, ())

    def produced(self, target: Record) -> bool:
        return target.digest in self.misets_by_digest

    def uni_ids(self, target: Record) -> frozenset[RecordId]:
        sets = self.misets_for(target)
        out: set[RecordId] = set()
        for m in sets:
            out |= m.ids
        return frozenset(out)

    def int_ids(self, target: Record) -> frozenset[RecordId]:
        sets = self.misets_for(target)
        if not sets:
            return frozenset()
        common = set(sets[0].ids)
        for m in sets[1:]:
            common &= m.ids
        return frozenset(common)

    def image_digests(self, subset: RecordSet) -> frozenset[str]:
        """Value digests of outputs still producible from ``subset`` of the inputs."""
        alive = []
        for r in self.outputs:
            if any(m.ids <= subset.ids for m in self.misets_for(r)):
                alive.append(r.digest)
        return frozenset(alive)

    def require_exact(self) -> None:
        if not self.exact:
            raise InexactProvenance(
                "stored minimal-subset sets are partial; simulation over them "
                "would be unsound"
            )


def simulated_member(
    sp1: StoredProvenance,
    sp2: StoredProvenance,
    subset: RecordSet,
    target: Record,
    budget: Optional[ExecutionBudget] = None,
) -> bool:
    """Would the two-stage chain still emit ``target`` when stage one runs on
    ``subset``? Answered purely from stored sets; zero real executions."""
    sp1.require_exact()
    sp2.require_exact()
    if budget is not None:
        budget.charge_virtual()
    available = sp1.image_digests(subset)
    return any(
        all(member.digest in available for member in m)
        for m in sp2.misets_for(target)
    )


def compose_as_operator(
    sp1: StoredProvenance, sp2: StoredProvenance, name: str = "composite"
) -> OperatorHandle:
    """A virtual operator over stage-one inputs, evaluated from stored sets.

    Every search algorithm runs on it unchanged; its applications count in
    the budget's virtual counter, never as real executions.
    """
    sp1.require_exact()
    sp2.require_exact()

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        available = sp1.image_digests(inputs[0])
        return [
            r
            for r in sp2.outputs
            if any(
                all(member.digest in available for member in m)
                for m in sp2.misets_for(r)
            )
        ]

    return OperatorHandle(name, 1, fn, backing="virtual")


@dataclass
class BoundedResult:
    """A provenance set with an honest relation to the (unknown) true set."""

    records: RecordSet
    relation: str  # "exact" | "superset_of_truth" | "subset_of_truth"
    which: str
    budget_spent: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.relation not in ("exact", "superset_of_truth", "subset_of_truth"):
            raise ValueError(f"unknown relation {self.relation!r}")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.which,
            "records": sorted(str(r.id) for r in self.records),
            "relation": self.relation,
            "budget_spent": dict(self.budget_spent),
        }


def _antichain_min(candidates: Iterable[frozenset[RecordId]]) -> list[frozenset[RecordId]]:
    unique = sorted(set(candidates), key=lambda s: (len(s), sorted(map(str, s))))
    kept: list[frozenset[RecordId]] = []
    for cand in unique:
        if not any(prev <= cand for prev in kept):
            kept.append(cand)
    return kept


def substitute_sources(
    misets: Sequence[RecordSet], source_sets: dict[str, Sequence[frozenset[RecordId]]]
) -> list[frozenset[RecordId]]:
    """Replace each intermediate member of each minimal subset with one of its
    own source sets, in all combinations, keeping only minimal results.

    Exact whenever the lower stage is record-additive (every intermediate's
    source sets are singletons then, and every truly minimal composite set
    arises as one of these unions).
    """
    candidates: list[frozenset[RecordId]] = []
    for m in misets:
        per_member = [list(source_sets[r.digest]) for r in m]
        if any(not options for options in per_member):
            continue
        for pick in itertools.product(*per_member):
            candidates.append(frozenset().union(*pick))
    return _antichain_min(candidates)


def _composed_pall(
    sp1: StoredProvenance, sp2: StoredProvenance, target: Record
) -> list[RecordSet]:
    source_sets = {
        r.digest: [m.ids for m in sp1.misets_for(r)] for r in sp2.inputs
    }
    merged = substitute_sources(sp2.misets_for(target), source_sets)
    return [sp1.inputs.restrict(ids) for ids in merged]


def compose_special(
    shape1: Optional[PropertyClass],
    shape2: Optional[PropertyClass],
    sp1: StoredProvenance,
    sp2: StoredProvenance,
    target: Record,
    which: str,
    requested_k: Optional[int] = None,
    budget: Optional[ExecutionBudget] = None,
) -> ProvenanceResult | BoundedResult:
    """Shape-directed shortcut composition of two stages for one target.

    Record-additive stage one (or stage two) gives exact results for every
    kind by substitution. Two arbitrary stages only admit cheap one-sided
    bounds for the union and intersection kinds; anything else must go
    through the virtual composite instead.
    """
    sp1.require_exact()
    sp2.require_exact()
    budget = budget if budget is not None else ExecutionBudget.unlimited()

    if is_additive_shape(shape1) or is_additive_shape(shape2):
        # additive stage one: its source sets are singletons, substitution is
        # exact; additive stage two: its minimal sets are singleton
        # intermediates, so the same substitution covers pass-through
        budget.charge_virtual()
        misets = _composed_pall(sp1, sp2, target)
        return result_from_misets(
            which, misets, exact=True, truncated=False, budget=budget,
            requested_k=requested_k,
        )

    if which == "uni":
        budget.charge_virtual()
        out: set[RecordId] = set()
        for rid_set in (sp1.uni_ids(r) for r in sp2.inputs.restrict(_stage2_set(sp2, target, "uni"))):
            out |= rid_set
        return BoundedResult(
            sp1.inputs.restrict(out), "superset_of_truth", "uni", budget.spent()
        )
    if which == "int":
        budget.charge_virtual()
        out = set()
        for rid_set in (sp1.int_ids(r) for r in sp2.inputs.restrict(_stage2_set(sp2, target, "int"))):
            out |= rid_set
        return BoundedResult(
            sp1.inputs.restrict(out), "subset_of_truth", "int", budget.spent()
        )
    raise UnsupportedCombination(
        f"no shortcut for kind {which!r} over two arbitrary stages; "
        "use the virtual composite"
    )


def _stage2_set(sp2: StoredProvenance, target: Record, which: str) -> frozenset[RecordId]:
    return sp2.uni_ids(target) if which == "uni" else sp2.int_ids(target)


@dataclass
class ChainStage:
    handle: OperatorHandle
    stored: StoredProvenance
    shape: Optional[PropertyClass] = None


def _collapse(
    first: ChainStage, second: ChainStage, budget: ExecutionBudget
) -> ChainStage:
    """Merge two adjacent stages into one whose stored sets run over the
    first stage's inputs. Exact either way: by substitution when a shape
    allows it, otherwise by searching the virtual composite."""
    first.stored.require_exact()
    second.stored.require_exact()
    composed: dict[str, tuple[RecordSet, ...]] = {}
    if is_additive_shape(first.shape) or is_additive_shape(second.shape):
        for r in second.stored.outputs:
            budget.charge_virtual()
            composed[r.digest] = tuple(_composed_pall(first.stored, second.stored, r))
    else:
        virtual = compose_as_operator(first.stored, second.stored)
        for r in second.stored.outputs:
            stream = enumerate_misets(virtual, first.stored.inputs, r, None, budget)
            composed[r.digest] = tuple(stream)
    merged_shape = (
        PropertyClass.ONE_TO_ONE
        if first.shape == second.shape == PropertyClass.ONE_TO_ONE
        else PropertyClass.ONE_TO_MANY
        if is_additive_shape(first.shape) and is_additive_shape(second.shape)
        else PropertyClass.ARBITRARY
    )
    stored = StoredProvenance(
        first.stored.inputs, second.stored.outputs, composed, exact=True
    )
    handle = compose_as_operator(first.stored, second.stored, name="collapsed")
    return ChainStage(handle, stored, merged_shape)


def compose_chain(
    stages: Sequence[ChainStage],
    target: Record,
    which: str,
    requested_k: Optional[int] = None,
    budget: Optional[ExecutionBudget] = None,
    mode: str = "exact",
) -> ProvenanceResult | BoundedResult:
    """Provenance of ``target``, produced by the last stage, over the first
    stage's inputs.

    ``exact`` mode folds stages into one composite (shortcut substitution
    where shapes allow, virtual search otherwise) and is always exact.
    ``bounds`` mode only applies the per-hop union rules, which is far
    cheaper over arbitrary stages but degrades the relation label honestly:
    only a one-output-per-record hop preserves the label (a one-to-many
    record can carry an output through a hop that a strict subset of its
    stage outputs already carried, so union results over-count), and once a
    hop over- or under-approximates, the final label says so.
    """
    if not stages:
        raise ValueError("empty chain")
    budget = budget if budget is not None else ExecutionBudget.unlimited()

    if mode == "exact" or which in ("all", "any", "imp"):
        current = stages[0]
        for nxt in stages[1:]:
            current = _collapse(current, nxt, budget)
        current.stored.require_exact()
        misets = current.stored.misets_for(target)
        return result_from_misets(
            which, misets, exact=True, truncated=False, budget=budget,
            requested_k=requested_k,
        )

    if mode != "bounds" or which not in ("uni", "int"):
        raise ValueError(f"unsupported mode {mode!r} for kind {which!r}")

    last = stages[-1]
    last.stored.require_exact()
    current_ids = (
        last.stored.uni_ids(target) if which == "uni" else last.stored.int_ids(target)
    )
    relation = "exact"
    carrier = last.stored.inputs
    for stage in reversed(stages[:-1]):
        stage.stored.require_exact()
        budget.charge_virtual()
        hop_exact = stage.shape == PropertyClass.ONE_TO_ONE
        out: set[RecordId] = set()
        for r in carrier.restrict(current_ids):
            out |= stage.stored.uni_ids(r) if which == "uni" else stage.stored.int_ids(r)
        current_ids = frozenset(out)
        carrier = stage.stored.inputs
        if not hop_exact:
            relation = "superset_of_truth" if which == "uni" else "subset_of_truth"
    return BoundedResult(
        carrier.restrict(current_ids), relation, which, budget.spent()
    )
