"""Provenance construction and interactive debugging for pipelines of
black-box monotonic operators.

The central object is the minimal input subset: a smallest set of input
records that still makes the operator emit a given output record. Everything
else (uniqueness tests, incremental enumeration, union / intersection /
impact summaries, composition across pipeline stages, shape-based fast
paths) is built on re-executing operators on chosen subsets under an
explicit execution budget.
"""

from .errors import (
    BoundViolated,
    BudgetExhausted,
    Cancelled,
    CorruptTrace,
    DivisionUndefined,
    InexactProvenance,
    MissingWitness,
    NondeterministicOperator,
    NotProduced,
    NotUnique,
    OperatorFailure,
    ProberError,
    ShapeViolation,
    TooLarge,
    UnknownRecord,
    UnsupportedCombination,
)
from .records import (
    Record,
    RecordId,
    RecordSet,
    canonical_value_bytes,
    flatten_ports,
    record,
    retag_tuple,
    unflatten_ports,
    value_digest,
)
from .operators import ExecutionBudget, OperatorHandle, PropertyClass, SpecLevel, operator
from .pipeline import (
    Edge,
    PipelineGraph,
    PipelineNode,
    dump_records_jsonl,
    load_records_jsonl,
    parse_pipeline_config,
    validate_pipeline,
)
from .engine import (
    MISetStream,
    ProvenanceResult,
    compute_p_imp,
    compute_p_int,
    compute_p_uni,
    enumerate_bounded,
    enumerate_misets,
    find_any_miset,
    find_next_miset,
    is_miset,
    is_unique_miset,
    result_from_misets,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
