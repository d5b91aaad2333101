"""Exception types shared across the package."""

from __future__ import annotations


class ProberError(Exception):
    """Base class for all errors raised by this package."""


class BudgetExhausted(ProberError):
    """The execution budget ran out before the requested call.

    Raised *before* the call that would exceed the limit executes. ``partial``
    may carry whatever intermediate state the aborted search had accumulated,
    so callers can surface truncated results instead of nothing.
    """

    def __init__(self, message: str = "execution budget exhausted", partial=None):
        super().__init__(message)
        self.partial = partial


class Cancelled(ProberError):
    """A consumer-driven cancellation stopped the search before the next call."""


class OperatorFailure(ProberError):
    """An operator invocation failed (bad exit, malformed output, timeout)."""


class NondeterministicOperator(ProberError):
    """A watchdog re-execution produced a different output set."""


class NotProduced(ProberError):
    """The target record is not produced by the given input set."""


class NotUnique(ProberError):
    """Informational: the record has more than one minimal input subset."""


class ShapeViolation(ProberError):
    """Recorded shape evidence contradicts observed behaviour."""


class MissingWitness(ProberError):
    """The operator's spec tables or rules yield no witness for the record."""


class BoundViolated(ProberError):
    """The caller's size bound excludes every minimal input subset."""


class InexactProvenance(ProberError):
    """Stored provenance is flagged partial where an exact set is required."""


class UnsupportedCombination(ProberError):
    """No shortcut composition rule applies to this operator pairing."""


class UnknownRecord(ProberError):
    """The requested record is not present in the referenced output set."""


class TooLarge(ProberError):
    """Input exceeds the exhaustive oracle's size guard."""


class CorruptTrace(ProberError):
    """A persisted run trace failed its integrity checks."""


class DivisionUndefined(ProberError):
    """A coverage ratio has an empty denominator."""
