"""Synthetic operators, a brute-force provenance oracle, retrieval baselines,
and evaluation metrics.

Everything here exists to test and demonstrate the search algorithms against
independently computed ground truth. The oracle enumerates subsets directly
and shares no minimization logic with the engine, so agreement between the
two is meaningful evidence.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from pathlib import Path
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import DivisionUndefined, TooLarge
from .operators import ExecutionBudget, OperatorHandle, PropertyClass, SpecLevel
from .records import (
    Record,
    RecordId,
    RecordSet,
    Value,
    value_digest,
)

# ---------------------------------------------------------------------------
# Output minting: synthetic operators are pure value functions, so output ids
# derive from output values. Equal values collapse to one record.
# ---------------------------------------------------------------------------


def mint(value: Value) -> Record:
    return Record(RecordId(0, "v" + value_digest(value)[:12]), value)


def mint_all(values: Iterable[Value]) -> list[Record]:
    out: dict[str, Record] = {}
    for v in values:
        r = mint(v)
        out.setdefault(r.id.local, r)
    return list(out.values())


def _text_of(value: Value) -> str:
    if isinstance(value, str):
        return value
    import json

    return json.dumps(dict(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# Synthetic operator builders
# ---------------------------------------------------------------------------


def make_identity(name: str = "identity") -> OperatorHandle:
    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        return mint_all(r.value for r in inputs[0])

    return OperatorHandle(name, 1, fn, declared_shape=PropertyClass.ONE_TO_ONE)


def _chunks(tokens: list[str], chunk_tokens: Optional[int], fanout: Optional[int]) -> list[str]:
    if chunk_tokens is not None:
        step = max(chunk_tokens, 1)
        return [" ".join(tokens[i : i + step]) for i in range(0, len(tokens), step)]
    f = max(fanout or 1, 1)
    n = len(tokens)
    base, rem = divmod(n, f)
    out, pos = [], 0
    for i in range(f):
        size = base + (1 if i < rem else 0)
        if size == 0:
            continue
        out.append(" ".join(tokens[pos : pos + size]))
        pos += size
    return out


def make_splitter(
    name: str = "splitter",
    chunk_tokens: Optional[int] = None,
    fanout: Optional[int] = None,
    merge_values: frozenset[str] = frozenset(),
    drop_values: frozenset[str] = frozenset(),
) -> OperatorHandle:
    """Split each text record into whole-token segments (one-to-many).

    ``merge_values``/``drop_values`` plant segmentation bugs for specific
    input values: a merged document glues its segments together without a
    separator (corrupting the boundary token), a dropped one keeps only the
    first segment.
    """

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        out: list[Value] = []
        for r in inputs[0]:
            text = _text_of(r.value)
            segments = _chunks(text.split(), chunk_tokens, fanout)
            if text in merge_values and len(segments) > 1:
                segments = ["".join(segments)]
            elif text in drop_values and len(segments) > 1:
                segments = segments[:1]
            out.extend(segments)
        return mint_all(out)

    return OperatorHandle(name, 1, fn, declared_shape=PropertyClass.ONE_TO_MANY)


def make_extractor(
    name: str = "extractor",
    marker: Optional[str] = None,
    fld: Optional[str] = None,
    swap_marker_for: dict[str, str] | None = None,
) -> OperatorHandle:
    """Project at most one value out of each record (one-to-one).

    Text mode emits the first token starting with ``marker``; map mode emits
    ``value[fld]`` as text. ``swap_marker_for`` plants a field-swap bug: for
    the listed input values, a different token prefix is extracted instead.
    """
    swap = swap_marker_for or {}

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        out: list[Value] = []
        for r in inputs[0]:
            if fld is not None:
                if isinstance(r.value, str) or fld not in r.value:
                    continue
                out.append(str(r.value[fld]))
                continue
            text = _text_of(r.value)
            prefix = swap.get(text, marker or "")
            for token in text.split():
                if token.startswith(prefix):
                    out.append(token)
                    break
        return mint_all(out)

    return OperatorHandle(name, 1, fn, declared_shape=PropertyClass.ONE_TO_ONE)


def make_dedup(
    name: str = "dedup", key_field: Optional[str] = None, min_count: int = 1
) -> OperatorHandle:
    """Collapse records sharing a key into one output carrying the key.

    With ``min_count`` > 1, a key only surfaces once its group reaches that
    size: a genuinely grouped (not record-additive) monotone operator.
    """

    def key_of(r: Record) -> Optional[str]:
        if key_field is None:
            return _text_of(r.value)
        if isinstance(r.value, str) or key_field not in r.value:
            return None
        return str(r.value[key_field])

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        groups: dict[str, int] = {}
        for r in inputs[0]:
            k = key_of(r)
            if k is not None:
                groups[k] = groups.get(k, 0) + 1
        return mint_all(k for k, n in groups.items() if n >= min_count)

    shape = PropertyClass.ONE_TO_ONE if min_count == 1 else PropertyClass.MANY_TO_ONE
    return OperatorHandle(name, 1, fn, declared_shape=shape)


def make_threshold(name: str = "threshold", min_support: int = 1, label: str = "") -> OperatorHandle:
    """Emit one fixed record once the input has at least ``min_support`` members."""
    out_value = label or f"quorum:{min_support}"

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        if len(inputs[0]) >= min_support:
            return [mint(out_value)]
        return []

    return OperatorHandle(name, 1, fn)


def make_join(name: str = "join", on: str = "k", arity: int = 2) -> OperatorHandle:
    """Match records across ports on a key field; emit one merged map per match."""

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        keyed: list[list[tuple[str, Record]]] = []
        for port_set in inputs:
            entries = []
            for r in port_set:
                if not isinstance(r.value, str) and on in r.value:
                    entries.append((str(r.value[on]), r))
            keyed.append(entries)
        out: list[Value] = []
        for combo in itertools.product(*keyed):
            keys = {k for k, _ in combo}
            if len(keys) != 1:
                continue
            merged: dict[str, object] = {}
            for port, (_, r) in enumerate(combo):
                for fk, fv in r.value.items():  # type: ignore[union-attr]
                    merged[f"p{port}.{fk}"] = fv
            out.append(merged)
        return mint_all(out)

    return OperatorHandle(name, arity, fn)


def make_scorer(name: str = "scorer") -> OperatorHandle:
    """Pass each text record through with a content-derived score attached."""

    def score(text: str) -> float:
        return int(value_digest(text)[:8], 16) % 1000 / 1000.0

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        out: list[Value] = []
        for r in inputs[0]:
            text = _text_of(r.value)
            out.append({"text": text, "score": score(text)})
        return mint_all(out)

    return OperatorHandle(name, 1, fn, declared_shape=PropertyClass.ONE_TO_ONE)


def make_top1(name: str = "top1") -> OperatorHandle:
    """Emit only the highest-scoring record: deliberately not monotone."""

    def score(text: str) -> tuple:
        return (int(value_digest(text)[:8], 16) % 1000, text)

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        texts = [_text_of(r.value) for r in inputs[0]]
        if not texts:
            return []
        return [mint(max(texts, key=score))]

    return OperatorHandle(name, 1, fn)


def make_rule_operator(
    rules: dict[str, list[frozenset[str]]], name: str = "rules"
) -> OperatorHandle:
    """Monotone operator from explicit support sets.

    ``rules`` maps each output text to a list of supporting input-text sets;
    the output appears iff some support set is fully present. Any monotone
    behavior over a finite domain can be written this way, which makes this
    the workhorse for randomized engine-vs-oracle tests.
    """

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        present = {_text_of(r.value) for r in inputs[0]}
        out = [
            target
            for target, supports in sorted(rules.items())
            if any(s <= present for s in supports)
        ]
        return mint_all(out)

    return OperatorHandle(name, 1, fn)


def make_chain_handle(handles: list[OperatorHandle], name: str = "chain") -> OperatorHandle:
    """Run a list of unary operators in sequence as one opaque operator.

    Used as the oracle's view of a composed pipeline; bypasses the stage
    handles' caches entirely.
    """

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        current = inputs
        out: list[Record] = list(inputs[0])
        for h in handles:
            out = mint_all(r.value for r in h.fn(current))
            current = (RecordSet(out),)
        return out

    return OperatorHandle(name, handles[0].arity if handles else 1, fn)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def brute_force_pall(
    op: OperatorHandle, inputs: RecordSet, target: Record, max_n: int = 12
) -> frozenset[RecordSet]:
    """Ground truth: all minimal producing subsets, by full 2^N enumeration.

    Independent of the engine on purpose: plain subset scan plus pairwise
    minimality filtering, nothing shared with the search algorithms.
    """
    n = len(inputs)
    if n > max_n:
        raise TooLarge(f"oracle refuses {n} inputs (limit {max_n})")
    budget = ExecutionBudget.unlimited()
    members = list(inputs)
    producing: list[frozenset[RecordId]] = []
    for size in range(n + 1):
        for combo in itertools.combinations(members, size):
            subset = RecordSet(combo)
            if op.member(subset, target, budget):
                producing.append(subset.ids)
    minimal = [
        s for s in producing if not any(t < s for t in producing)
    ]
    return frozenset(inputs.restrict(ids) for ids in minimal)


def oracle_kinds(pall: frozenset[RecordSet], inputs: RecordSet) -> dict:
    """Union/intersection/impact ground truth derived from oracle P_all."""
    all_ids = [m.ids for m in pall]
    uni: set[RecordId] = set().union(*all_ids) if all_ids else set()
    inter: set[RecordId] = set.intersection(*map(set, all_ids)) if all_ids else set()
    counts: dict[RecordId, int] = {}
    for ids in all_ids:
        for rid in ids:
            counts[rid] = counts.get(rid, 0) + 1
    impacts = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {
        "uni": inputs.restrict(uni),
        "int": inputs.restrict(inter),
        "imp": [(inputs.get(rid), c) for rid, c in impacts],
    }


# ---------------------------------------------------------------------------
# The built-in instance matrix: (operator, input, target) triples with known
# shape, small enough for the oracle, covering every shape class.
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    name: str
    kind: str
    params: dict
    input_rows: list[tuple[int, str, Value]]  # (port, local id, value)
    target_value: Value
    shape: PropertyClass

    def make(self) -> OperatorHandle:
        """A fresh handle (fresh caches) for this instance's operator."""
        return build_operator(self.kind, self.params, name=self.name)

    @property
    def inputs(self) -> RecordSet:
        return RecordSet(Record(RecordId(p, l), v) for p, l, v in self.input_rows)

    @property
    def target(self) -> Record:
        return Record(RecordId(0, "probe"), self.target_value)


def build_operator(kind: str, params: dict, name: str = "") -> OperatorHandle:
    """Factory over the synthetic kinds; also the pipeline-config registry hook."""
    label = name or kind
    if kind == "identity":
        return make_identity(label)
    if kind == "splitter":
        return make_splitter(
            label,
            chunk_tokens=params.get("chunk_tokens"),
            fanout=params.get("fanout"),
            merge_values=frozenset(params.get("merge_values", ())),
            drop_values=frozenset(params.get("drop_values", ())),
        )
    if kind == "extractor":
        return make_extractor(
            label,
            marker=params.get("marker"),
            fld=params.get("field"),
            swap_marker_for=params.get("swap_marker_for"),
        )
    if kind == "dedup":
        return make_dedup(label, key_field=params.get("key_field"), min_count=params.get("min_count", 1))
    if kind == "threshold":
        return make_threshold(label, min_support=params["min_support"], label=params.get("label", ""))
    if kind == "join":
        return make_join(label, on=params.get("on", "k"), arity=params.get("arity", 2))
    if kind == "scorer":
        return make_scorer(label)
    if kind == "top1":
        return make_top1(label)
    if kind == "rules":
        rules = {t: [frozenset(s) for s in supports] for t, supports in params["rules"].items()}
        return make_rule_operator(rules, label)
    raise ValueError(f"unknown synthetic operator kind {kind!r}")


def _texts(port: int, *pairs: tuple[str, Value]) -> list[tuple[int, str, Value]]:
    return [(port, local, value) for local, value in pairs]


def build_instance_matrix() -> list[Instance]:
    """Every (operator, input, target) triple used by the oracle-equivalence suite."""
    one = PropertyClass.ONE_TO_ONE
    many = PropertyClass.ONE_TO_MANY
    m2o = PropertyClass.MANY_TO_ONE
    arb = PropertyClass.ARBITRARY
    out: list[Instance] = []

    def add(name, kind, params, rows, target, shape):
        out.append(Instance(name, kind, params, rows, target, shape))

    # identity
    add("idn-1", "identity", {}, _texts(0, ("a", "apple")), "apple", one)
    for t in ("x", "y", "z"):
        add(f"idn-3-{t}", "identity", {}, _texts(0, ("a", "x"), ("b", "y"), ("c", "z")), t, one)
    four = _texts(0, ("a", "p"), ("b", "q"), ("c", "r"), ("d", "s"))
    for t in ("p", "q", "r", "s"):
        add(f"idn-4-{t}", "identity", {}, four, t, one)
    add("idn-dup", "identity", {}, _texts(0, ("a", "same"), ("b", "same")), "same", one)

    # splitter
    spl1 = _texts(0, ("d1", "alpha beta gamma delta"))
    add("spl-f2-head", "splitter", {"fanout": 2}, spl1, "alpha beta", many)
    add("spl-f2-tail", "splitter", {"fanout": 2}, spl1, "gamma delta", many)
    spl2 = _texts(0, ("d1", "t1 t2 t3 t4"), ("d2", "u1 u2"))
    for t in ("t1 t2", "t3 t4", "u1 u2"):
        add(f"spl-c2-{t.split()[0]}", "splitter", {"chunk_tokens": 2}, spl2, t, many)
    shared = _texts(0, ("d1", "red blue"), ("d2", "blue green"))
    add("spl-shared", "splitter", {"chunk_tokens": 1}, shared, "blue", many)
    spl3 = _texts(0, ("d1", "a1 a2 a3 a4 a5 a6"))
    for t in ("a1 a2", "a3 a4", "a5 a6"):
        add(f"spl-f3-{t.split()[0]}", "splitter", {"fanout": 3}, spl3, t, many)

    # extractor
    seg = _texts(0, ("s1", "name1 addr1_0"), ("s2", "name2 addr2_0"), ("s3", "name3 only"))
    add("ext-prefix-1", "extractor", {"marker": "addr"}, seg, "addr1_0", one)
    add("ext-prefix-2", "extractor", {"marker": "addr"}, seg, "addr2_0", one)
    cities = _texts(
        0,
        ("m1", {"city": "austin", "n": 1}),
        ("m2", {"city": "boston", "n": 2}),
        ("m3", {"city": "austin", "n": 3}),
    )
    add("ext-field-austin", "extractor", {"field": "city"}, cities, "austin", one)
    add("ext-field-boston", "extractor", {"field": "city"}, cities, "boston", one)

    # dedup
    dd1 = _texts(0, ("a", "k1"), ("b", "k1"), ("c", "k2"), ("d", "k2"))
    add("ddp-min1-k1", "dedup", {"min_count": 1}, dd1, "k1", one)
    add("ddp-min1-k2", "dedup", {"min_count": 1}, dd1, "k2", one)
    dd2 = _texts(
        0,
        ("a", {"k": "g1"}),
        ("b", {"k": "g1"}),
        ("c", {"k": "g2"}),
        ("d", {"k": "g2"}),
        ("e", {"k": "g2"}),
    )
    add("ddp-min2-g1", "dedup", {"key_field": "k", "min_count": 2}, dd2, "g1", m2o)
    add("ddp-min2-g2", "dedup", {"key_field": "k", "min_count": 2}, dd2, "g2", m2o)

    # support threshold
    def voters(n, value=None):
        return [(0, f"v{i}", value if value is not None else f"ballot {i}") for i in range(n)]

    add("thr-1-2", "threshold", {"min_support": 1}, voters(2), "quorum:1", arb)
    add("thr-2-3", "threshold", {"min_support": 2}, voters(3), "quorum:2", arb)
    add("thr-2-4", "threshold", {"min_support": 2}, voters(4), "quorum:2", arb)
    add("thr-2-5", "threshold", {"min_support": 2}, voters(5), "quorum:2", arb)
    add("thr-3-4", "threshold", {"min_support": 3}, voters(4), "quorum:3", arb)
    add("thr-3-5-same", "threshold", {"min_support": 3}, voters(5, "vote"), "quorum:3", arb)
    add("thr-4-6", "threshold", {"min_support": 4}, voters(6), "quorum:4", arb)
    add("thr-3-3", "threshold", {"min_support": 3}, voters(3), "quorum:3", arb)

    # tagged join (two ports)
    j1 = [
        (0, "l1", {"k": "a", "lv": 1}),
        (0, "l2", {"k": "b", "lv": 2}),
        (1, "r1", {"k": "a", "rv": 10}),
        (1, "r2", {"k": "b", "rv": 20}),
    ]
    add("jn-a", "join", {"on": "k"}, j1, {"p0.k": "a", "p0.lv": 1, "p1.k": "a", "p1.rv": 10}, arb)
    add("jn-b", "join", {"on": "k"}, j1, {"p0.k": "b", "p0.lv": 2, "p1.k": "b", "p1.rv": 20}, arb)
    j2 = [
        (0, "l1", {"k": "a", "lv": 1}),
        (1, "r1", {"k": "a", "rv": 1}),
        (1, "r2", {"k": "a", "rv": 2}),
    ]
    add("jn-fan-1", "join", {"on": "k"}, j2, {"p0.k": "a", "p0.lv": 1, "p1.k": "a", "p1.rv": 1}, arb)
    add("jn-fan-2", "join", {"on": "k"}, j2, {"p0.k": "a", "p0.lv": 1, "p1.k": "a", "p1.rv": 2}, arb)

    # scorer
    sc = _texts(0, ("a", "p"), ("b", "q"), ("c", "r"))
    for t in ("p", "q", "r"):
        score = int(value_digest(t)[:8], 16) % 1000 / 1000.0
        add(f"sc-{t}", "scorer", {}, sc, {"text": t, "score": score}, one)

    # explicit support rules (arbitrary monotone structure)
    five = _texts(0, ("a", "a"), ("b", "b"), ("c", "c"), ("d", "d"), ("e", "e"))
    add(
        "rule-diamond",
        "rules",
        {"rules": {"hit": [["a", "b"], ["c"]]}},
        five,
        "hit",
        arb,
    )
    add(
        "rule-nested",
        "rules",
        {"rules": {"hit": [["a"], ["a", "b"]]}},
        five,
        "hit",
        arb,
    )
    add("rule-solo", "rules", {"rules": {"hit": [["a", "b", "c"]]}}, five, "hit", arb)
    add("rule-pairs", "rules", {"rules": {"hit": [["a", "b"], ["c", "d"]]}}, five, "hit", arb)
    add(
        "rule-wide",
        "rules",
        {"rules": {"hit": [["a"], ["b"], ["c"], ["d"], ["e"]]}},
        five,
        "hit",
        arb,
    )
    return out


# ---------------------------------------------------------------------------
# Two-stage chains for composition tests
# ---------------------------------------------------------------------------


@dataclass
class ChainInstance:
    name: str
    stage_kinds: list[tuple[str, dict]]
    input_rows: list[tuple[int, str, Value]]
    shapes: list[PropertyClass]

    def make_handles(self) -> list[OperatorHandle]:
        return [
            build_operator(kind, params, name=f"{self.name}-s{i}")
            for i, (kind, params) in enumerate(self.stage_kinds)
        ]

    @property
    def inputs(self) -> RecordSet:
        return RecordSet(Record(RecordId(p, l), v) for p, l, v in self.input_rows)


def build_chain_matrix() -> list[ChainInstance]:
    one = PropertyClass.ONE_TO_ONE
    many = PropertyClass.ONE_TO_MANY
    arb = PropertyClass.ARBITRARY
    docs3 = _texts(0, ("d1", "x y"), ("d2", "y z"), ("d3", "z w"))
    docs4 = [
        (0, f"d{j}", f"name{j}_0 addr{j}_0 name{j}_1 addr{j}_1") for j in range(4)
    ]
    docs8 = [
        (0, f"d{j}", f"name{j}_0 addr{j}_0 name{j}_1 addr{j}_1") for j in range(8)
    ]
    short4 = _texts(0, ("a", "a"), ("b", "b"), ("c", "c"), ("d", "d"))
    shared = _texts(0, ("d1", "red blue"), ("d2", "blue green"), ("d3", "green red"))
    return [
        ChainInstance(
            "ch-split-thresh",
            [("splitter", {"chunk_tokens": 1}), ("threshold", {"min_support": 2})],
            docs3,
            [many, arb],
        ),
        ChainInstance(
            "ch-split-extract",
            [("splitter", {"chunk_tokens": 2}), ("extractor", {"marker": "addr"})],
            docs4,
            [many, one],
        ),
        ChainInstance(
            "ch-split-extract-8",
            [("splitter", {"chunk_tokens": 2}), ("extractor", {"marker": "addr"})],
            docs8,
            [many, one],
        ),
        ChainInstance(
            "ch-ident-thresh",
            [("identity", {}), ("threshold", {"min_support": 2})],
            short4,
            [one, arb],
        ),
        ChainInstance(
            "ch-thresh-ident",
            [("threshold", {"min_support": 2}), ("identity", {})],
            short4,
            [arb, one],
        ),
        ChainInstance(
            "ch-split-dedup",
            [("splitter", {"chunk_tokens": 1}), ("dedup", {"min_count": 1})],
            shared,
            [many, one],
        ),
        ChainInstance(
            "ch-rules-rules",
            [
                (
                    "rules",
                    {
                        "rules": {
                            "u": [["a", "b"]],
                            "v": [["c"]],
                            "w": [["d", "e"], ["a", "d"]],
                        }
                    },
                ),
                ("rules", {"rules": {"f": [["u", "v"], ["w"]]}}),
            ],
            _texts(0, ("a", "a"), ("b", "b"), ("c", "c"), ("d", "d"), ("e", "e")),
            [arb, arb],
        ),
    ]


# ---------------------------------------------------------------------------
# Synthetic end-to-end runs with optional planted segmentation bugs
# ---------------------------------------------------------------------------

ADDRESS_SHAPE = re.compile(r"addr\d+_\d+")


def looks_like_address(value: Value) -> bool:
    return isinstance(value, str) and ADDRESS_SHAPE.fullmatch(value) is not None


@dataclass
class SyntheticRun:
    graph: object  # PipelineGraph; typed loosely to keep this module import-light
    inputs: RecordSet
    truth: dict[str, dict]  # final record value -> {"sources": [doc ids], "valid": bool}
    missing: list[str]  # values the clean pipeline would emit but this one lost
    planted: dict[int, str]  # doc index -> error kind


def doc_value(j: int) -> str:
    return f"name{j}_0 addr{j}_0 name{j}_1 addr{j}_1"


def generate_synthetic_run(
    n_docs: int, seed: int = 1, planted_errors: Iterable[str] = ()
) -> SyntheticRun:
    """A source → splitter → extractor pipeline over generated documents.

    Each document holds two name/address segments. Planted error kinds:
    ``merge`` glues one document's segments (corrupting a boundary token),
    ``drop`` loses its second segment, ``swap`` extracts the name field
    instead of the address. The affected documents are chosen by ``seed``.
    """
    from .pipeline import Edge, PipelineGraph, PipelineNode

    if n_docs < 1:
        raise ValueError("need at least one document")
    rng = random.Random(seed)
    planted: dict[int, str] = {}
    candidates = list(range(n_docs))
    for kind in planted_errors:
        if kind not in ("merge", "drop", "swap"):
            raise ValueError(f"unknown planted error {kind!r}")
        if not candidates:
            break
        j = candidates.pop(rng.randrange(len(candidates)))
        planted[j] = kind

    docs = [Record(RecordId(0, f"d{j}"), doc_value(j)) for j in range(n_docs)]
    merge_vals = frozenset(doc_value(j) for j, k in planted.items() if k == "merge")
    drop_vals = frozenset(doc_value(j) for j, k in planted.items() if k == "drop")
    swap_vals: dict[str, str] = {}
    for j, k in planted.items():
        if k == "swap":
            swap_vals[f"name{j}_0 addr{j}_0"] = "name"

    split_params = {
        "chunk_tokens": 2,
        "merge_values": sorted(merge_vals),
        "drop_values": sorted(drop_vals),
    }
    extract_params: dict = {"marker": "addr"}
    if swap_vals:
        extract_params["swap_marker_for"] = swap_vals

    nodes = [
        PipelineNode("wb", "source"),
        PipelineNode("sg", "splitter", split_params, build_operator("splitter", split_params, "sg")),
        PipelineNode("ad", "extractor", extract_params, build_operator("extractor", extract_params, "ad")),
    ]
    edges = [Edge("wb", "sg", 0), Edge("sg", "ad", 0)]
    graph = PipelineGraph(nodes, edges)

    truth: dict[str, dict] = {}
    missing: list[str] = []
    for j in range(n_docs):
        kind = planted.get(j)
        if kind == "merge":
            merged = f"name{j}_0 addr{j}_0name{j}_1 addr{j}_1"
            token = merged.split()[1]
            truth[token] = {"sources": [f"d{j}"], "valid": False}
            missing.append(f"addr{j}_1")
        elif kind == "drop":
            truth[f"addr{j}_0"] = {"sources": [f"d{j}"], "valid": True}
            missing.append(f"addr{j}_1")
        elif kind == "swap":
            truth[f"name{j}_0"] = {"sources": [f"d{j}"], "valid": False}
            truth[f"addr{j}_1"] = {"sources": [f"d{j}"], "valid": True}
        else:
            truth[f"addr{j}_0"] = {"sources": [f"d{j}"], "valid": True}
            truth[f"addr{j}_1"] = {"sources": [f"d{j}"], "valid": True}
    return SyntheticRun(graph, RecordSet(docs), truth, missing, planted)


def golden_corpus(n_docs: int = 10) -> tuple[RecordSet, list[OperatorHandle]]:
    """The term-preserving corpus for the retrieval-baseline comparison."""
    docs = RecordSet(Record(RecordId(0, f"d{j}"), doc_value(j)) for j in range(n_docs))
    handles = [
        make_splitter("sg", chunk_tokens=2),
        make_extractor("ad", marker="addr"),
    ]
    return docs, handles


# ---------------------------------------------------------------------------
# Retrieval baselines
# ---------------------------------------------------------------------------

_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def baseline_retrieval(corpus: RecordSet, target: Record, mode: str) -> RecordSet:
    """Which documents would a keyword search blame for ``target``?

    ``all_recs`` returns everything; ``wrd_and`` documents containing every
    token of the target value; ``wrd_or`` documents containing at least one.
    """
    if mode == "all_recs":
        return corpus
    terms = set(tokenize(_text_of(target.value)))
    keep = []
    for doc in corpus:
        doc_terms = set(tokenize(_text_of(doc.value)))
        if mode == "wrd_and" and terms <= doc_terms:
            keep.append(doc)
        elif mode == "wrd_or" and terms & doc_terms:
            keep.append(doc)
        elif mode not in ("wrd_and", "wrd_or"):
            raise ValueError(f"unknown baseline mode {mode!r}")
    return RecordSet(keep)


# ---------------------------------------------------------------------------
# Evaluation metrics
# ---------------------------------------------------------------------------


@dataclass
class MetricReport:
    coverage: dict[str, float]
    record_coverage: list[float]  # cumulative impact mass at k = 1..len
    miset_coverage: list[float]  # fraction of MISets touched by top-k records
    miset_count: int
    uni_size: int

    def __post_init__(self):
        for v in self.coverage.values():
            assert 0.0 <= v <= 1.0
        for series in (self.record_coverage, self.miset_coverage):
            assert all(0.0 <= v <= 1.0 for v in series)


def compute_metrics(
    pall: Iterable[RecordSet],
    puni: RecordSet,
    extra_sets: dict[str, RecordSet] | None = None,
    any_ks: Iterable[int] = (1, 3, 5),
) -> MetricReport:
    """Coverage and rank-based curves for one record's provenance.

    Coverage of a set is its size over |union of all MISets|; the any-k entry
    uses the union of the first k MISets in discovery order. The rank curves
    order records by how many MISets contain them.
    """
    misets = list(pall)
    if len(puni) == 0:
        raise DivisionUndefined("union provenance is empty; coverage undefined")
    counts: dict[RecordId, int] = {}
    for m in misets:
        for rid in m.ids:
            counts[rid] = counts.get(rid, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total_mass = sum(c for _, c in ranked)

    coverage: dict[str, float] = {}
    for label, rset in (extra_sets or {}).items():
        coverage[label] = len(rset) / len(puni)
    for k in any_ks:
        union: set[RecordId] = set()
        for m in misets[:k]:
            union |= m.ids
        coverage[f"any-{k}"] = len(union) / len(puni)

    record_curve: list[float] = []
    running = 0
    for _, c in ranked:
        running += c
        record_curve.append(running / total_mass if total_mass else 0.0)

    miset_curve: list[float] = []
    top: set[RecordId] = set()
    for rid, _ in ranked:
        top.add(rid)
        touched = sum(1 for m in misets if m.ids & top)
        miset_curve.append(touched / len(misets) if misets else 0.0)

    return MetricReport(coverage, record_curve, miset_curve, len(misets), len(puni))


# ---------------------------------------------------------------------------
# Frozen instance matrix
# ---------------------------------------------------------------------------


def frozen_matrix_path() -> Path:
    return Path(__file__).parent / "data" / "instance_matrix_v1.json"


def load_frozen_matrix() -> list[tuple[Instance, list[list[str]]]]:
    """The versioned golden file: instances plus their expected minimal sets
    as sorted lists of "port:local" id strings."""
    doc = json.loads(frozen_matrix_path().read_text(encoding="utf-8"))
    out = []
    for e in doc["instances"]:
        inst = Instance(
            e["name"],
            e["kind"],
            e["params"],
            [(p, l, v) for p, l, v in e["inputs"]],
            e["target"],
            PropertyClass(e["shape"]),
        )
        out.append((inst, e["expected_pall"]))
    return out


def run_oracle_suite(live: bool = False) -> dict:
    """Compare engine enumeration against the frozen golden sets.

    With ``live`` on, also recompute the brute-force oracle and compare it
    to the frozen file, guarding the golden data itself.
    """
    from .engine import enumerate_misets

    failures: list[dict] = []
    checked = 0
    for inst, expected in load_frozen_matrix():
        checked += 1
        budget = ExecutionBudget.unlimited()
        found = list(
            enumerate_misets(inst.make(), inst.inputs, inst.target, None, budget)
        )
        got = sorted(sorted(str(r.id) for r in m) for m in found)
        if got != expected:
            failures.append({"name": inst.name, "expected": expected, "engine": got})
            continue
        if live:
            oracle = brute_force_pall(inst.make(), inst.inputs, inst.target)
            truth = sorted(sorted(str(r.id) for r in m) for m in oracle)
            if truth != expected:
                failures.append(
                    {"name": inst.name, "expected": expected, "oracle": truth}
                )
    return {"instances": checked, "failures": failures, "agree": not failures}
