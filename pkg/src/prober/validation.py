"""Bundled JSON Schemas for every external document format.

Names map to files under ``prober/schemas/``; ``validate`` raises
``jsonschema.ValidationError`` on the first mismatch.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

SCHEMA_NAMES = (
    "pipeline-config",
    "record-line",
    "provenance-result",
    "graph",
    "runs-list",
    "outputs-page",
    "sse-done",
    "evidence-report",
)


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise ValueError(f"unknown schema {name!r}; have {', '.join(SCHEMA_NAMES)}")
    path = resources.files("prober") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


def validate(doc, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))
