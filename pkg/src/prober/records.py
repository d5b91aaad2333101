"""Records, record sets, and the canonical value encoding.

A record is an identified unit of data flowing between operators. Identity
(``RecordId``) is only stable within one run; across re-executions the only
stable key is content, so value equality is defined over a canonical byte
encoding and every membership test the search algorithms perform goes through
that encoding, never through ids.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

Scalar = Union[str, int, float, bool, None]
Value = Union[str, Mapping[str, Scalar]]

_SCALAR_TYPES = (str, int, float, bool, type(None))


@dataclass(frozen=True, order=True)
class RecordId:
    """(port, local) pair; ``port`` tags which input port the record sits on."""

    port: int
    local: str

    def __post_init__(self):
        if self.port < 0:
            raise ValueError(f"record port must be non-negative, got {self.port}")

    def __str__(self) -> str:
        return f"{self.port}:{self.local}"

    @classmethod
    def parse(cls, text: str) -> "RecordId":
        port, sep, local = text.partition(":")
        if not sep:
            raise ValueError(f"malformed record id {text!r}, expected 'port:local'")
        return cls(int(port), local)


def canonical_value_bytes(value: Value) -> bytes:
    """Canonical byte encoding of a record value.

    Text values compare by exact UTF-8 bytes (no case folding, no whitespace
    normalization); map values serialize with sorted keys. A type prefix keeps
    text and map encodings from ever colliding.
    """
    if isinstance(value, str):
        return b"t:" + value.encode("utf-8")
    if isinstance(value, Mapping):
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"map value keys must be strings, got {k!r}")
            if not isinstance(v, _SCALAR_TYPES):
                raise TypeError(f"map value fields must be scalars, got {v!r} for key {k!r}")
        blob = json.dumps(dict(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return b"m:" + blob.encode("utf-8")
    raise TypeError(f"record values must be text or a flat map, got {type(value).__name__}")


def value_digest(value: Value) -> str:
    return hashlib.sha256(canonical_value_bytes(value)).hexdigest()


@dataclass(frozen=True, eq=False)
class Record:
    """An identified record; two records are value-equal iff their canonical bytes match."""

    id: RecordId
    value: Value
    digest: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "digest", value_digest(self.value))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Record):
            return NotImplemented
        return self.id == other.id and self.digest == other.digest

    def __hash__(self) -> int:
        return hash((self.id, self.digest))

    def with_port(self, port: int) -> "Record":
        if self.id.port == port:
            return self
        return Record(RecordId(port, self.id.local), self.value)

    def __repr__(self) -> str:
        return f"Record({self.id}, {self.value!r})"


def record(local: str, value: Value, port: int = 0) -> Record:
    """Shorthand constructor used pervasively by tests and demos."""
    return Record(RecordId(port, local), value)


class RecordSet:
    """An immutable set of records, iterated in ascending (port, local) order.

    Ids must be unique; values may repeat (distinct records can carry equal
    content). Value membership is answered from a digest index.
    """

    __slots__ = ("_records", "_by_id", "_digests")

    def __init__(self, records: Iterable[Record] = ()):
        ordered = sorted(records, key=lambda r: r.id)
        by_id = {}
        for r in ordered:
            if r.id in by_id:
                raise ValueError(f"duplicate record id {r.id}")
            by_id[r.id] = r
        self._records: tuple[Record, ...] = tuple(ordered)
        self._by_id: dict[RecordId, Record] = by_id
        self._digests: frozenset[str] = frozenset(r.digest for r in ordered)

    # -- basic protocol -------------------------------------------------

    def __iter__(self) -> Iterator[Record]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __bool__(self) -> bool:
        return bool(self._records)

    def __contains__(self, item) -> bool:
        if isinstance(item, Record):
            return item.id in self._by_id
        return item in self._by_id

    def __eq__(self, other) -> bool:
        if not isinstance(other, RecordSet):
            return NotImplemented
        return self._records == other._records

    def __hash__(self) -> int:
        return hash(self._records)

    def __repr__(self) -> str:
        return f"RecordSet({list(self._records)!r})"

    # -- views -----------------------------------------------------------

    @property
    def records(self) -> tuple[Record, ...]:
        return self._records

    @property
    def ids(self) -> frozenset[RecordId]:
        return frozenset(self._by_id)

    @property
    def value_digests(self) -> frozenset[str]:
        return self._digests

    def get(self, rid: RecordId) -> Record:
        return self._by_id[rid]

    # -- queries ----------------------------------------------------------

    def contains_by_value(self, probe: Record) -> bool:
        """True iff some member has equal canonical value; ids are ignored."""
        return probe.digest in self._digests

    def values_subset_of(self, other: "RecordSet") -> bool:
        return self._digests <= other._digests

    def issubset(self, other: "RecordSet") -> bool:
        return self.ids <= other.ids

    # -- derivation --------------------------------------------------------

    def minus(self, members: Iterable[Record]) -> "RecordSet":
        drop = {m.id for m in members}
        return RecordSet(r for r in self._records if r.id not in drop)

    def minus_ids(self, ids: Iterable[RecordId]) -> "RecordSet":
        drop = set(ids)
        return RecordSet(r for r in self._records if r.id not in drop)

    def restrict(self, ids: Iterable[RecordId]) -> "RecordSet":
        keep = set(ids)
        return RecordSet(r for r in self._records if r.id in keep)

    def union(self, other: "RecordSet") -> "RecordSet":
        merged = dict(self._by_id)
        for r in other:
            existing = merged.get(r.id)
            if existing is not None and existing.digest != r.digest:
                raise ValueError(f"id {r.id} bound to two different values in union")
            merged[r.id] = r
        return RecordSet(merged.values())


EMPTY = RecordSet()


def retag_tuple(inputs: tuple[RecordSet, ...]) -> tuple[RecordSet, ...]:
    """Re-tag each tuple position's records with that position as their port."""
    return tuple(
        RecordSet(r.with_port(i) for r in port_set) for i, port_set in enumerate(inputs)
    )


def flatten_ports(inputs: tuple[RecordSet, ...]) -> RecordSet:
    """Disjoint union of the input tuple, members tagged by tuple position."""
    out = []
    for i, port_set in enumerate(inputs):
        out.extend(r.with_port(i) for r in port_set)
    return RecordSet(out)


def unflatten_ports(flat: RecordSet, arity: int) -> tuple[RecordSet, ...]:
    """Inverse of :func:`flatten_ports`: group members by port tag."""
    buckets: list[list[Record]] = [[] for _ in range(arity)]
    for r in flat:
        if r.id.port >= arity:
            raise ValueError(f"record {r.id} tagged beyond arity {arity}")
        buckets[r.id.port].append(r)
    return tuple(RecordSet(b) for b in buckets)
