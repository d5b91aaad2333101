"""Shape- and witness-based shortcuts versus the general search and oracle."""

import pytest

from prober import (
    ExecutionBudget,
    MissingWitness,
    NotProduced,
    NotUnique,
    RecordSet,
    ShapeViolation,
    record,
)
from prober.fastpaths import (
    WitnessSet,
    minimize_witness,
    provenance_direct_scan,
    provenance_unique,
    witness_from_rules,
    witness_from_spec,
    witness_from_table,
)
from prober.harness import (
    brute_force_pall,
    build_instance_matrix,
    make_dedup,
    make_splitter,
    make_threshold,
    oracle_kinds,
)
from prober.operators import PropertyClass
from prober.records import RecordId


def by_locals(records, locals_):
    return records.restrict(RecordId(0, l) for l in locals_)


def out_with_value(op, inputs, value):
    outputs = op.apply_counted(inputs, ExecutionBudget.unlimited())
    return next(r for r in outputs if r.value == value)

ADDITIVE = [
    i
    for i in build_instance_matrix()
    if i.shape in (PropertyClass.ONE_TO_ONE, PropertyClass.ONE_TO_MANY)
]


def ids_of(miset):
    return frozenset(r.id for r in miset)


def as_set_of_sets(misets):
    return frozenset(ids_of(m) for m in misets)


@pytest.fixture(params=ADDITIVE, ids=[i.name for i in ADDITIVE])
def additive_instance(request):
    return request.param


def test_matrix_has_additive_instances():
    assert len(ADDITIVE) >= 12


def test_direct_scan_matches_oracle(additive_instance):
    inst = additive_instance
    oracle = brute_force_pall(inst.make(), inst.inputs, inst.target)
    budget = ExecutionBudget.unlimited()
    result = provenance_direct_scan(inst.make(), inst.inputs, inst.target, "all", budget)
    assert as_set_of_sets(result.misets) == as_set_of_sets(oracle)
    assert result.exact and not result.truncated
    assert all(len(m) == 1 for m in result.misets)


def test_direct_scan_stays_within_n_executions(additive_instance):
    inst = additive_instance
    budget = ExecutionBudget.unlimited()
    provenance_direct_scan(inst.make(), inst.inputs, inst.target, "all", budget)
    assert budget.executions <= len(inst.inputs)


def test_direct_scan_derived_kinds(additive_instance):
    inst = additive_instance
    oracle = brute_force_pall(inst.make(), inst.inputs, inst.target)
    truth = oracle_kinds(oracle, inst.inputs)
    budget = ExecutionBudget.unlimited()
    uni = provenance_direct_scan(inst.make(), inst.inputs, inst.target, "uni", budget)
    assert uni.records.ids == truth["uni"].ids
    intr = provenance_direct_scan(inst.make(), inst.inputs, inst.target, "int", budget)
    assert intr.records.ids == truth["int"].ids
    imp = provenance_direct_scan(inst.make(), inst.inputs, inst.target, "imp", budget)
    assert [(r.id, n) for r, n in imp.impacts] == [(r.id, n) for r, n in truth["imp"]]


def test_direct_scan_any_k_is_a_prefix(additive_instance):
    inst = additive_instance
    budget = ExecutionBudget.unlimited()
    full = provenance_direct_scan(inst.make(), inst.inputs, inst.target, "all", budget)
    anyk = provenance_direct_scan(
        inst.make(), inst.inputs, inst.target, "any", budget, requested_k=1
    )
    assert len(anyk.misets) == 1
    assert as_set_of_sets(anyk.misets) <= as_set_of_sets(full.misets)


def test_direct_scan_flags_misdeclared_shape():
    # a support threshold produces from pairs but never from singletons
    op = make_threshold("lying", min_support=2)
    inputs = RecordSet([record("s1", "v"), record("s2", "w"), record("s3", "x")])
    target = record("probe", "quorum:2")
    with pytest.raises(ShapeViolation):
        provenance_direct_scan(op, inputs, target, "all", ExecutionBudget.unlimited())


def test_direct_scan_not_produced():
    op = make_splitter("spl", chunk_tokens=1)
    inputs = RecordSet([record("d1", "alpha beta")])
    with pytest.raises(NotProduced):
        provenance_direct_scan(
            op, inputs, record("probe", "gamma"), "all", ExecutionBudget.unlimited()
        )


def test_unique_shortcut_collapses_all_kinds():
    op = make_splitter("spl", chunk_tokens=1)
    inputs = RecordSet([record("d1", "alpha beta"), record("d2", "gamma")])
    target = record("probe", "gamma")
    budget = ExecutionBudget.unlimited()
    result = provenance_unique(op, inputs, target, budget, which="all")
    assert as_set_of_sets(result.misets) == {frozenset(by_locals(inputs, ["d2"]).ids)}
    uni = provenance_unique(op, inputs, target, budget, which="uni")
    assert [r.id.local for r in uni.records] == ["d2"]
    intr = provenance_unique(op, inputs, target, budget, which="int")
    assert [r.id.local for r in intr.records] == ["d2"]


def test_unique_shortcut_refuses_ambiguity():
    op = make_threshold("thr", min_support=2)
    inputs = RecordSet([record("a", "u"), record("b", "v"), record("c", "w")])
    with pytest.raises(NotUnique):
        provenance_unique(
            op, inputs, record("probe", "quorum:2"), ExecutionBudget.unlimited()
        )


# ---------------------------------------------------------------------------
# Declared witnesses
# ---------------------------------------------------------------------------


DOCS = RecordSet(
    [
        record("d1", {"key": "k1", "text": "alpha"}),
        record("d2", {"key": "k2", "text": "beta"}),
        record("d3", {"key": "k1", "text": "gamma"}),
    ]
)


def grouper():
    return make_dedup("grp", key_field="key", min_count=1)


def test_witness_table_resolves_ids():
    op = grouper()
    target = out_with_value(op, DOCS, "k1")
    w = witness_from_table({target.id.local: ["d1", "d3"]}, DOCS, target)
    assert sorted(r.id.local for r in w.members) == ["d1", "d3"]
    assert w.source == "io_spec" and not w.minimal


def test_witness_table_missing_entry():
    with pytest.raises(MissingWitness):
        witness_from_table({}, DOCS, record("probe", "x"))


def test_witness_table_unknown_input():
    with pytest.raises(MissingWitness):
        witness_from_table({"probe": ["ghost"]}, DOCS, record("probe", "x"))


def test_witness_rules_match_on_field():
    op = grouper()
    target = out_with_value(op, DOCS, "k1")
    w = witness_from_rules(
        [{"output_field": "value", "input_field": "key"}], DOCS, target
    )
    assert sorted(r.id.local for r in w.members) == ["d1", "d3"]
    assert w.source == "integrity_constraint"


def test_witness_rules_no_match():
    with pytest.raises(MissingWitness):
        witness_from_rules(
            [{"output_field": "value", "input_field": "key"}],
            DOCS,
            record("probe", "k9"),
        )


def test_witness_verification_rejects_stale_table():
    op = make_threshold("thr", min_support=2)
    inputs = RecordSet([record("a", "u"), record("b", "v"), record("c", "w")])
    target = record("probe", "quorum:2")
    with pytest.raises(MissingWitness):
        witness_from_spec(
            op, inputs, target, table={"probe": ["a"]}, budget=ExecutionBudget.unlimited()
        )
    w = witness_from_spec(
        op,
        inputs,
        target,
        table={"probe": ["a", "b", "c"]},
        budget=ExecutionBudget.unlimited(),
    )
    assert len(w.members) == 3


def test_minimize_witness_probes_only_witness_members():
    op = make_threshold("thr", min_support=2)
    inputs = RecordSet([record(f"s{i}", f"v{i}") for i in range(10)])
    witness = WitnessSet(by_locals(inputs, ["s1", "s2", "s3"]), "io_spec")
    budget = ExecutionBudget.unlimited()
    minimal = minimize_witness(op, witness, record("probe", "quorum:2"), budget)
    assert len(minimal) == 2
    # production check + one probe per witness member, never the other seven
    assert budget.executions <= 1 + len(witness.members)


def test_minimize_witness_rejects_nonproducing():
    op = make_threshold("thr", min_support=3)
    witness = WitnessSet(
        RecordSet([record("a", "u"), record("b", "v")]), "io_spec"
    )
    with pytest.raises(NotProduced):
        minimize_witness(op, witness, record("probe", "quorum:3"), ExecutionBudget.unlimited())
