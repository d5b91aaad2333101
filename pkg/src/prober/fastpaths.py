"""Shortcut provenance construction when operator knowledge allows it.

Record-additive operators (each input contributes independently) need only a
linear singleton scan. Outputs with a single minimal subset collapse every
provenance kind to that one set. Declared input/output witnesses (lookup
tables or key-matching rules) seed minimization so it touches far fewer
records than the operator's whole input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .engine import (
    ProvenanceResult,
    _minimize,
    is_unique_miset,
    result_from_misets,
)
from .errors import MissingWitness, NotProduced, NotUnique, ShapeViolation
from .operators import ExecutionBudget, OperatorHandle
from .records import Record, RecordId, RecordSet


def provenance_direct_scan(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    which: str,
    budget: ExecutionBudget,
    requested_k: Optional[int] = None,
) -> ProvenanceResult:
    """Linear scan for record-additive operators: every minimal subset is a
    singleton, so probing each {i} alone finds them all in ≤ |inputs| calls.

    If no singleton produces a target the full input does produce, the
    operator's declared shape was wrong; the caller must fall back to the
    general search.
    """
    singletons = [
        RecordSet([r]) for r in inputs if op.member(RecordSet([r]), target, budget)
    ]
    if not singletons:
        if op.member(inputs, target, budget):
            raise ShapeViolation(
                f"operator {op.name}: no single input produces the target although "
                "the full input does; the additive-shape evidence is wrong"
            )
        raise NotProduced(
            f"operator {op.name} does not produce the target from the given inputs"
        )
    misets = singletons if which != "any" else singletons[: (requested_k or 1)]
    return result_from_misets(
        which, misets, exact=True, truncated=False, budget=budget, requested_k=requested_k,
    )


def provenance_unique(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    budget: ExecutionBudget,
    which: str = "all",
    requested_k: Optional[int] = None,
) -> ProvenanceResult:
    """All provenance kinds collapse to the one minimal subset when it is unique."""
    unique, found = is_unique_miset(op, inputs, target, budget)
    if not unique:
        raise NotUnique(
            f"target has more than one minimal subset under {op.name}; "
            "use the general enumeration"
        )
    return result_from_misets(
        which, [found], exact=True, truncated=False, budget=budget, requested_k=requested_k,
    )


@dataclass(frozen=True)
class WitnessSet:
    """An input set declared (not discovered) to produce a target."""

    members: RecordSet
    source: str  # "io_spec" | "integrity_constraint"
    minimal: bool = False


def witness_from_table(
    table: Mapping[str, list[str]], inputs: RecordSet, target: Record
) -> WitnessSet:
    """Resolve a declared output-id → input-ids table entry to records."""
    entry = table.get(target.id.local)
    if entry is None:
        raise MissingWitness(f"no table entry for output {target.id.local!r}")
    ids = []
    for token in entry:
        rid = RecordId.parse(token) if ":" in token else RecordId(0, token)
        if rid not in inputs.ids:
            raise MissingWitness(f"witness references unknown input {rid}")
        ids.append(rid)
    return WitnessSet(inputs.restrict(ids), "io_spec")


def witness_from_rules(
    rules: list[Mapping[str, str]], inputs: RecordSet, target: Record
) -> WitnessSet:
    """Evaluate key-matching rules: an input whose key field equals the
    target's output field value is a witness candidate."""

    def field_value(value, name: str):
        if name == "value":
            return value if isinstance(value, str) else None
        if isinstance(value, str):
            return None
        return value.get(name)

    members: dict[RecordId, Record] = {}
    for rule in rules:
        out_val = field_value(target.value, rule["output_field"])
        if out_val is None:
            continue
        for r in inputs:
            if field_value(r.value, rule["input_field"]) == out_val:
                members[r.id] = r
    if not members:
        raise MissingWitness(
            f"no input matches any key rule for output {target.id.local!r}"
        )
    return WitnessSet(RecordSet(members.values()), "integrity_constraint")


def witness_from_spec(
    op: OperatorHandle,
    inputs: RecordSet,
    target: Record,
    table: Optional[Mapping[str, list[str]]] = None,
    rules: Optional[list[Mapping[str, str]]] = None,
    verify: bool = True,
    budget: Optional[ExecutionBudget] = None,
) -> WitnessSet:
    """Build a witness from whichever declaration the operator carries.

    Declared tables drift; with ``verify`` on, one execution confirms the
    witness really produces the target before anyone trusts it.
    """
    if table is not None:
        witness = witness_from_table(table, inputs, target)
    elif rules is not None:
        witness = witness_from_rules(rules, inputs, target)
    else:
        raise MissingWitness(f"operator {op.name} carries no witness declaration")
    if verify:
        budget = budget if budget is not None else ExecutionBudget.unlimited()
        if not op.member(witness.members, target, budget):
            raise MissingWitness(
                f"declared witness for {target.id.local!r} does not produce it"
            )
    return witness


def minimize_witness(
    op: OperatorHandle, witness: WitnessSet, target: Record, budget: ExecutionBudget
) -> RecordSet:
    """Shrink a witness to a true minimal subset: at most |witness| probes
    beyond the production check, independent of the full input size."""
    if not op.member(witness.members, target, budget):
        raise NotProduced(
            f"witness for {target.id.local!r} does not produce it; the declaration is stale"
        )
    return _minimize(op, witness.members, target, budget)
