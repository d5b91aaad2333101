"""Which inputs does one output actually need?

A support-threshold operator emits a verdict once enough reviews agree.
This walk-through asks, for that single verdict record, every provenance
question the engine supports, and shows what each answer costs in true
re-executions of the operator.
"""

from prober import ExecutionBudget, RecordSet, record
from prober.engine import (
    compute_p_imp,
    compute_p_int,
    compute_p_uni,
    enumerate_misets,
    find_any_miset,
)
from prober.harness import make_threshold

# Five reviews; the verdict fires at three or more.
reviews = RecordSet(
    [
        record("rev-ana", "looks correct"),
        record("rev-bo", "confirmed"),
        record("rev-cy", "agree"),
        record("rev-dee", "ship it"),
        record("rev-eli", "fine by me"),
    ]
)
quorum = make_threshold("verdict", min_support=3)
verdict = record("probe", "quorum:3")

print("operator: emit one verdict once >= 3 reviews are present")
print(f"inputs:   {', '.join(r.id.local for r in reviews)}\n")

# One minimal subset is enough to show the verdict is explainable.
budget = ExecutionBudget.unlimited()
first = find_any_miset(quorum, reviews, verdict, budget)
print(f"one minimal subset:  {sorted(r.id.local for r in first)}")
print(f"  cost: {budget.executions} executions (contract: at most N+1 = 6)\n")

# All of them, streamed as they are found. Any three reviews do.
budget = ExecutionBudget.unlimited()
stream = enumerate_misets(make_threshold("verdict", min_support=3), reviews, verdict, None, budget)
print("every minimal subset:")
for i, miset in enumerate(stream, start=1):
    print(f"  {i:2d}. {sorted(r.id.local for r in miset)}")
print(f"  complete: {stream.exhausted}, cost: {budget.executions} executions\n")

# Derived views answer coarser questions much more cheaply.
budget = ExecutionBudget.unlimited()
union = compute_p_uni(make_threshold("verdict", min_support=3), reviews, verdict, budget)
print(f"could matter (union):        {sorted(r.id.local for r in union.records)}")

budget = ExecutionBudget.unlimited()
needed = compute_p_int(make_threshold("verdict", min_support=3), reviews, verdict, budget)
print(f"always needed (intersection): {sorted(r.id.local for r in needed.records) or '(none)'}")
print(f"  cost: {budget.executions} executions (contract: at most N+1 = 6)\n")

budget = ExecutionBudget.unlimited()
impact = compute_p_imp(make_threshold("verdict", min_support=3), reviews, verdict, budget)
print("impact ranking (how many minimal subsets each review appears in):")
for r, count in impact.impacts:
    print(f"  {r.id.local:8s} {count}")
print("\nno review is irreplaceable, all are equally influential: exactly")
print("what a 3-of-5 quorum should look like.")
