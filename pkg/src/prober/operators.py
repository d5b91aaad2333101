"""Counted, memoized execution of black-box operators.

Every algorithm in this package reasons about an operator purely through
re-execution on subsets of its original input. Executions are the unit of
cost, so each one flows through an :class:`ExecutionBudget`; repeated calls on
the same input are answered from a per-handle cache and cost nothing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import BudgetExhausted, Cancelled, NondeterministicOperator, OperatorFailure
from .records import Record, RecordSet, unflatten_ports

OperatorFn = Callable[[tuple[RecordSet, ...]], Iterable[Record]]


class SpecLevel(enum.Enum):
    """How much is known about an operator beyond the ability to run it."""

    BLACK_BOX = "black_box"
    EXACT = "exact"
    IO_SPEC = "io_spec"
    INTEGRITY_CONSTRAINT = "integrity_constraint"


class PropertyClass(enum.Enum):
    """Structural input/output shape of an operator."""

    ARBITRARY = "arbitrary"
    ONE_TO_ONE = "one_to_one"
    ONE_TO_MANY = "one_to_many"
    MANY_TO_ONE = "many_to_one"


@dataclass
class ExecutionBudget:
    """Mutable counter for the cost of a provenance request.

    ``limit`` bounds true executions; the budget refuses (raises
    :class:`BudgetExhausted`) before starting an execution that would exceed
    it, so a limit of N means at most N operator runs actually happen.
    ``cancel_check`` is polled before every true execution and aborts the
    request with :class:`Cancelled` when it returns True.
    """

    limit: Optional[int] = None
    executions: int = 0
    cached_hits: int = 0
    records_fetched: int = 0  # input records materialized into cache-miss calls
    virtual_executions: int = 0
    cancel_check: Optional[Callable[[], bool]] = None

    @classmethod
    def unlimited(cls) -> "ExecutionBudget":
        return cls(limit=None)

    @property
    def remaining(self) -> Optional[int]:
        if self.limit is None:
            return None
        return max(self.limit - self.executions, 0)

    def charge_execution(self) -> None:
        if self.cancel_check is not None and self.cancel_check():
            raise Cancelled("provenance request cancelled")
        if self.limit is not None and self.executions >= self.limit:
            raise BudgetExhausted(
                f"execution budget of {self.limit} exhausted"
            )
        self.executions += 1

    def note_cached(self) -> None:
        self.cached_hits += 1

    def charge_virtual(self) -> None:
        # simulated evaluations are not capped, but stay cancellable
        if self.cancel_check is not None and self.cancel_check():
            raise Cancelled("provenance request cancelled")
        self.virtual_executions += 1

    def charge_fetch(self, n: int) -> None:
        self.records_fetched += n

    def spent(self) -> dict:
        return {
            "executions": self.executions,
            "cached_hits": self.cached_hits,
            "records_fetched": self.records_fetched,
            "virtual_executions": self.virtual_executions,
        }


def _cache_key(inputs: RecordSet, arity: int) -> tuple:
    # value multiset per port: two value-equal records are still two records
    # to a counting operator, so multiplicity must stay in the key
    buckets: list[list[str]] = [[] for _ in range(arity)]
    for r in inputs:
        if r.id.port >= arity:
            raise ValueError(f"record {r.id} tagged beyond arity {arity}")
        buckets[r.id.port].append(r.digest)
    return tuple(tuple(sorted(b)) for b in buckets)


class OperatorHandle:
    """A named operator plus its memo cache and determinism watchdog.

    The wrapped function maps a tuple of per-port record sets to output
    records; outputs are re-tagged to port 0 on the way out. The memo cache
    keys on canonical input values (ids never matter), and a separate
    watchdog map survives cache clears: re-executing a previously seen input
    must reproduce the same output values or the handle raises
    :class:`NondeterministicOperator`.
    """

    def __init__(
        self,
        name: str,
        arity: int,
        fn: OperatorFn,
        spec_level: SpecLevel = SpecLevel.BLACK_BOX,
        declared_shape: Optional[PropertyClass] = None,
        witness_fn: Optional[Callable[[RecordSet, Record], frozenset]] = None,
        backing: str = "builtin",
    ):
        if arity < 1:
            raise ValueError("operator arity must be at least 1")
        if backing not in ("builtin", "external", "virtual"):
            raise ValueError(f"unknown backing {backing!r}")
        self.name = name
        self.arity = arity
        self.fn = fn
        self.spec_level = spec_level
        self.declared_shape = declared_shape
        self.witness_fn = witness_fn
        self.backing = backing
        self._cache: dict[tuple, RecordSet] = {}
        self._watchdog: dict[tuple, frozenset[str]] = {}

    def __repr__(self) -> str:
        return f"OperatorHandle({self.name!r}, arity={self.arity})"

    def clear_cache(self) -> None:
        """Drop memoized outputs; the determinism watchdog keeps its history."""
        self._cache.clear()

    def apply_counted(self, inputs: RecordSet, budget: ExecutionBudget) -> RecordSet:
        """Run the operator on ``inputs`` (port-tagged), charging the budget.

        Cached inputs cost a cache hit only; a true execution is charged
        before the operator runs, so budget exhaustion and cancellation both
        fire without a wasted call.
        """
        key = _cache_key(inputs, self.arity)
        hit = self._cache.get(key)
        if hit is not None:
            budget.note_cached()
            return hit
        if self.backing == "virtual":
            budget.charge_virtual()
        else:
            budget.charge_execution()
            budget.charge_fetch(len(inputs))
        try:
            raw = self.fn(unflatten_ports(inputs, self.arity))
            out = RecordSet(r.with_port(0) for r in raw)
        except (BudgetExhausted, Cancelled):
            raise
        except Exception as exc:
            raise OperatorFailure(f"operator {self.name} failed: {exc}") from exc
        seen = self._watchdog.get(key)
        if seen is not None and seen != out.value_digests:
            raise NondeterministicOperator(
                f"operator {self.name} produced different outputs for equal inputs"
            )
        self._watchdog[key] = out.value_digests
        self._cache[key] = out
        return out

    def member(self, inputs: RecordSet, target: Record, budget: ExecutionBudget) -> bool:
        """Value-level membership probe: does running on ``inputs`` yield ``target``?"""
        return self.apply_counted(inputs, budget).contains_by_value(target)


def operator(
    name: str,
    arity: int = 1,
    spec_level: SpecLevel = SpecLevel.BLACK_BOX,
    declared_shape: Optional[PropertyClass] = None,
) -> Callable[[OperatorFn], OperatorHandle]:
    """Decorator sugar: wrap a plain function into an :class:`OperatorHandle`."""

    def wrap(fn: OperatorFn) -> OperatorHandle:
        return OperatorHandle(name, arity, fn, spec_level, declared_shape)

    return wrap
