"""Chain provenance versus really-executed chains.

The soundness bar: membership simulated from stored per-record minimal
subsets must agree with actually running the chain, on every subset for
small inputs and on large random samples otherwise, while charging zero
real executions. Shortcut rules must equal the oracle where they claim
exactness and bound it from the right side where they do not.
"""

import itertools
import random

import pytest

from prober import (
    BudgetExhausted,
    ExecutionBudget,
    InexactProvenance,
    RecordSet,
    UnsupportedCombination,
    enumerate_misets,
    record,
)
from prober.composition import (
    BoundedResult,
    ChainStage,
    StoredProvenance,
    compose_as_operator,
    compose_chain,
    compose_special,
    substitute_sources,
    simulated_member,
)
from prober.harness import (
    brute_force_pall,
    build_chain_matrix,
    make_chain_handle,
    make_identity,
    make_rule_operator,
    make_splitter,
    make_threshold,
    oracle_kinds,
)
from prober.operators import PropertyClass
from prober.records import RecordId

CHAINS = build_chain_matrix()


def ids_of(miset):
    return frozenset(r.id for r in miset)


def as_set_of_sets(misets):
    return frozenset(ids_of(m) for m in misets)


def all_subsets(records):
    members = list(records)
    for n in range(len(members) + 1):
        for combo in itertools.combinations(members, n):
            yield RecordSet(combo)


def random_subsets(records, count, seed):
    rng = random.Random(seed)
    members = list(records)
    for _ in range(count):
        yield RecordSet(rng.sample(members, rng.randint(0, len(members))))


def chain_produces(handles, subset, target):
    out = make_chain_handle(handles).fn((subset,))
    return any(r.digest == target.digest for r in out)


def build_two_stage(ch):
    h1, h2 = ch.make_handles()
    sp1 = StoredProvenance.build(h1, ch.inputs)
    sp2 = StoredProvenance.build(h2, sp1.outputs)
    return sp1, sp2


@pytest.fixture(params=CHAINS, ids=[c.name for c in CHAINS])
def chain(request):
    return request.param


def test_chain_matrix_covers_shape_mixes():
    mixes = {tuple(s.value for s in c.shapes) for c in CHAINS}
    assert any("arbitrary" == a and "arbitrary" == b for a, b in mixes)
    assert any(a in ("one_to_one", "one_to_many") for a, _ in mixes)
    assert any(b in ("one_to_one", "one_to_many") for _, b in mixes)


def test_simulated_membership_agrees_with_real_chain(chain):
    sp1, sp2 = build_two_stage(chain)
    handles = chain.make_handles()
    budget = ExecutionBudget.unlimited()
    if len(chain.inputs) <= 6:
        subsets = list(all_subsets(chain.inputs))
    else:
        subsets = list(random_subsets(chain.inputs, 1000, seed=20260814))
    checked = 0
    for subset in subsets:
        for target in sp2.outputs:
            simulated = simulated_member(sp1, sp2, subset, target, budget)
            assert simulated == chain_produces(handles, subset, target)
            checked += 1
    assert checked >= len(subsets)
    # the whole sweep ran on stored sets alone
    assert budget.executions == 0 and budget.records_fetched == 0
    assert budget.virtual_executions == checked


def test_virtual_composite_search_equals_chain_oracle(chain):
    sp1, sp2 = build_two_stage(chain)
    virtual = compose_as_operator(sp1, sp2)
    budget = ExecutionBudget.unlimited()
    for target in sp2.outputs:
        oracle = brute_force_pall(
            make_chain_handle(chain.make_handles()), chain.inputs, target
        )
        found = list(enumerate_misets(virtual, chain.inputs, target, None, budget))
        assert as_set_of_sets(found) == as_set_of_sets(oracle)
    assert budget.executions == 0
    assert budget.virtual_executions > 0


def test_compose_special_exact_rows_equal_oracle(chain):
    shape1, shape2 = chain.shapes
    additive = (PropertyClass.ONE_TO_ONE, PropertyClass.ONE_TO_MANY)
    if shape1 not in additive and shape2 not in additive:
        pytest.skip("no exact shortcut row for this shape mix")
    sp1, sp2 = build_two_stage(chain)
    for target in sp2.outputs:
        oracle = brute_force_pall(
            make_chain_handle(chain.make_handles()), chain.inputs, target
        )
        truth = oracle_kinds(oracle, chain.inputs)
        result = compose_special(shape1, shape2, sp1, sp2, target, "all")
        assert result.exact
        assert as_set_of_sets(result.misets) == as_set_of_sets(oracle)
        uni = compose_special(shape1, shape2, sp1, sp2, target, "uni")
        assert uni.records.ids == truth["uni"].ids
        intr = compose_special(shape1, shape2, sp1, sp2, target, "int")
        assert intr.records.ids == truth["int"].ids


def test_compose_special_bounds_on_arbitrary_pair():
    ch = next(
        c
        for c in CHAINS
        if all(s == PropertyClass.ARBITRARY for s in c.shapes)
    )
    sp1, sp2 = build_two_stage(ch)
    arb = PropertyClass.ARBITRARY
    for target in sp2.outputs:
        oracle = brute_force_pall(
            make_chain_handle(ch.make_handles()), ch.inputs, target
        )
        truth = oracle_kinds(oracle, ch.inputs)
        uni = compose_special(arb, arb, sp1, sp2, target, "uni")
        assert isinstance(uni, BoundedResult)
        assert uni.relation == "superset_of_truth"
        assert truth["uni"].ids <= uni.records.ids
        intr = compose_special(arb, arb, sp1, sp2, target, "int")
        assert intr.relation == "subset_of_truth"
        assert intr.records.ids <= truth["int"].ids
        with pytest.raises(UnsupportedCombination):
            compose_special(arb, arb, sp1, sp2, target, "all")


def test_substitution_keeps_only_minimal_results():
    a, b, c = RecordId(0, "a"), RecordId(0, "b"), RecordId(0, "c")
    misets = [RecordSet([record("r", "r")]), RecordSet([record("q", "q")])]
    source_sets = {
        record("r", "r").digest: [frozenset([a, b])],
        record("q", "q").digest: [frozenset([a])],
    }
    # {a} produces via q, so the nonminimal {a, b} candidate must drop out
    assert substitute_sources(misets, source_sets) == [frozenset([a])]
    assert substitute_sources([], source_sets) == []


def test_partial_stored_sets_refuse_simulation():
    op = make_threshold("thr", min_support=2)
    inputs = RecordSet([record(f"s{i}", f"v{i}") for i in range(4)])
    sp = StoredProvenance.build(op, inputs, ExecutionBudget(limit=3))
    assert not sp.exact
    full = StoredProvenance.build(op, inputs)
    with pytest.raises(InexactProvenance):
        simulated_member(sp, full, inputs, next(iter(full.outputs)))


# ---------------------------------------------------------------------------
# Longer chains
# ---------------------------------------------------------------------------


def three_stage_mixed():
    docs = RecordSet(
        [record("d1", "x y"), record("d2", "y z"), record("d3", "z w")]
    )
    handles = [
        make_identity("pass"),
        make_splitter("split", chunk_tokens=1),
        make_threshold("quorum", min_support=2),
    ]
    shapes = [
        PropertyClass.ONE_TO_ONE,
        PropertyClass.ONE_TO_MANY,
        PropertyClass.ARBITRARY,
    ]
    return docs, handles, shapes


def build_stages(docs, handles, shapes):
    stages = []
    current = docs
    for h, s in zip(handles, shapes):
        sp = StoredProvenance.build(h, current)
        stages.append(ChainStage(h, sp, s))
        current = sp.outputs
    return stages


def test_compose_chain_exact_mode_three_stages():
    docs, handles, shapes = three_stage_mixed()
    stages = build_stages(docs, handles, shapes)
    budget = ExecutionBudget.unlimited()
    for target in stages[-1].stored.outputs:
        oracle = brute_force_pall(make_chain_handle(handles), docs, target)
        result = compose_chain(stages, target, "all", budget=budget)
        assert result.exact
        assert as_set_of_sets(result.misets) == as_set_of_sets(oracle)
    assert budget.executions == 0


def test_compose_chain_bounds_labels_degrade_over_fanout():
    # one-to-many hop: b's sole token also comes from a, so the union rule
    # over-counts and the label must admit it
    docs = RecordSet([record("a", "r q"), record("b", "r")])
    handles = [
        make_splitter("split", chunk_tokens=1),
        make_rule_operator({"t": [frozenset(["r", "q"])]}, name="need-both"),
    ]
    shapes = [PropertyClass.ONE_TO_MANY, PropertyClass.ARBITRARY]
    stages = build_stages(docs, handles, shapes)
    target = next(iter(stages[-1].stored.outputs))
    oracle = brute_force_pall(make_chain_handle(handles), docs, target)
    truth = oracle_kinds(oracle, docs)
    bound = compose_chain(stages, target, "uni", mode="bounds")
    assert bound.relation == "superset_of_truth"
    assert truth["uni"].ids < bound.records.ids  # honestly over-approximate here
    exact = compose_chain(stages, target, "uni", mode="exact")
    assert exact.records.ids == truth["uni"].ids


def test_compose_chain_bounds_exact_through_one_to_one_hops():
    docs = RecordSet([record("a", "u"), record("b", "v"), record("c", "w")])
    handles = [
        make_identity("pass1"),
        make_identity("pass2"),
        make_threshold("quorum", min_support=2),
    ]
    shapes = [
        PropertyClass.ONE_TO_ONE,
        PropertyClass.ONE_TO_ONE,
        PropertyClass.ARBITRARY,
    ]
    stages = build_stages(docs, handles, shapes)
    target = next(iter(stages[-1].stored.outputs))
    oracle = brute_force_pall(make_chain_handle(handles), docs, target)
    truth = oracle_kinds(oracle, docs)
    for which in ("uni", "int"):
        bound = compose_chain(stages, target, which, mode="bounds")
        assert bound.relation == "exact"
        assert bound.records.ids == truth[which].ids


def test_compose_chain_bounds_honest_on_mixed_chain():
    docs, handles, shapes = three_stage_mixed()
    stages = build_stages(docs, handles, shapes)
    for target in stages[-1].stored.outputs:
        oracle = brute_force_pall(make_chain_handle(handles), docs, target)
        truth = oracle_kinds(oracle, docs)
        uni = compose_chain(stages, target, "uni", mode="bounds")
        assert uni.relation == "superset_of_truth"
        assert truth["uni"].ids <= uni.records.ids
        intr = compose_chain(stages, target, "int", mode="bounds")
        assert intr.relation == "subset_of_truth"
        assert intr.records.ids <= truth["int"].ids


def test_compose_chain_single_stage_bounds_are_exact():
    docs = RecordSet([record("a", "u"), record("b", "v"), record("c", "w")])
    op = make_threshold("quorum", min_support=2)
    sp = StoredProvenance.build(op, docs)
    stage = ChainStage(op, sp, PropertyClass.ARBITRARY)
    target = next(iter(sp.outputs))
    oracle = brute_force_pall(make_threshold("fresh", min_support=2), docs, target)
    truth = oracle_kinds(oracle, docs)
    bound = compose_chain([stage], target, "uni", mode="bounds")
    assert bound.relation == "exact"
    assert bound.records.ids == truth["uni"].ids


def test_compose_chain_rejects_bad_arguments():
    docs = RecordSet([record("a", "u")])
    op = make_identity("pass")
    stage = ChainStage(op, StoredProvenance.build(op, docs), PropertyClass.ONE_TO_ONE)
    with pytest.raises(ValueError):
        compose_chain([], record("probe", "u"), "all")
    with pytest.raises(ValueError):
        compose_chain([stage], record("probe", "u"), "uni", mode="sideways")
