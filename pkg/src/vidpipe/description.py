"""Pipeline descriptions and their canonical JSON text.

A step may only reference pipeline inputs or *earlier* steps, so any
well-formed description is a DAG by construction. The canonical text has a
fixed field order, sorted binding keys, no whitespace and shortest
round-trip floats, which makes ``serialize(deserialize(text)) == text``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Tuple

from .errors import ParseError, SchemaVersionUnsupported
from .hyperspace import freeze

SCHEMA_VERSION = "1"
_REF = re.compile(r"^(inputs|steps)\.(0|[1-9][0-9]*)$")
_PIPELINE_ID = re.compile(r"^[0-9a-f]{32}$")


def parse_ref(ref: str) -> Tuple[str, int]:
    """Split ``"steps.3"`` into ``("steps", 3)``; ValueError on malformed text."""
    m = _REF.match(ref) if isinstance(ref, str) else None
    if not m:
        raise ValueError(f"malformed reference {ref!r}")
    return m.group(1), int(m.group(2))


@dataclass(frozen=True)
class StepDescription:
    primitive: Tuple[str, str]
    bindings: Mapping[str, Any] = field(default_factory=dict)
    inputs: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "primitive", tuple(self.primitive))
        object.__setattr__(self, "bindings", {k: freeze(v) for k, v in dict(self.bindings).items()})
        object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class PipelineDescription:
    pipeline_id: str
    num_inputs: int
    steps: Tuple[StepDescription, ...]
    output: str

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))


def _thaw(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


def to_jsonable(desc: PipelineDescription) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "pipeline_id": desc.pipeline_id,
        "num_inputs": desc.num_inputs,
        "steps": [
            {
                "primitive": {"name": s.primitive[0], "version": s.primitive[1]},
                "bindings": {k: _thaw(s.bindings[k]) for k in sorted(s.bindings)},
                "inputs": list(s.inputs),
            }
            for s in desc.steps
        ],
        "output": desc.output,
    }


def serialize_pipeline(desc: PipelineDescription) -> str:
    return json.dumps(to_jsonable(desc), separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(k, f"duplicate field {k!r}")
        out[k] = v
    return out


def _reject_constant(name):
    raise ParseError(name, f"non-finite number {name} is not allowed")


def _expect_fields(obj: Any, expected: Tuple[str, ...], where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(where, "expected an object")
    if list(obj) != list(expected):
        extra = [k for k in obj if k not in expected]
        missing = [k for k in expected if k not in obj]
        if extra:
            raise ParseError(where, f"unknown field(s) {extra}")
        if missing:
            raise ParseError(where, f"missing field(s) {missing}")
        raise ParseError(where, f"fields out of order, expected {list(expected)}")


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def deserialize_pipeline(text: str) -> PipelineDescription:
    try:
        obj = json.loads(text, object_pairs_hook=_no_duplicates, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.pos, exc.msg) from None
    if isinstance(obj, dict) and "schema_version" in obj and obj["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionUnsupported("schema_version", f"unsupported schema version {obj['schema_version']!r}")
    _expect_fields(obj, ("schema_version", "pipeline_id", "num_inputs", "steps", "output"), "$")
    if not isinstance(obj["pipeline_id"], str) or not _PIPELINE_ID.match(obj["pipeline_id"]):
        raise ParseError("$.pipeline_id", "pipeline_id must be 32 lowercase hex characters")
    if not _is_int(obj["num_inputs"]) or obj["num_inputs"] < 0:
        raise ParseError("$.num_inputs", "num_inputs must be a non-negative integer")
    if not isinstance(obj["steps"], list):
        raise ParseError("$.steps", "steps must be a list")
    steps: List[StepDescription] = []
    for i, raw in enumerate(obj["steps"]):
        where = f"$.steps[{i}]"
        _expect_fields(raw, ("primitive", "bindings", "inputs"), where)
        _expect_fields(raw["primitive"], ("name", "version"), where + ".primitive")
        name, version = raw["primitive"]["name"], raw["primitive"]["version"]
        if not isinstance(name, str) or not isinstance(version, str):
            raise ParseError(where + ".primitive", "name and version must be strings")
        if not isinstance(raw["bindings"], dict):
            raise ParseError(where + ".bindings", "bindings must be an object")
        if not isinstance(raw["inputs"], list):
            raise ParseError(where + ".inputs", "inputs must be a list")
        for ref in raw["inputs"]:
            try:
                parse_ref(ref)
            except ValueError as exc:
                raise ParseError(where + ".inputs", str(exc)) from None
        steps.append(StepDescription((name, version), raw["bindings"], tuple(raw["inputs"])))
    try:
        space, idx = parse_ref(obj["output"])
    except ValueError as exc:
        raise ParseError("$.output", str(exc)) from None
    if space != "steps" or idx >= len(steps):
        raise ParseError("$.output", f"output {obj['output']!r} does not name an existing step")
    return PipelineDescription(obj["pipeline_id"], obj["num_inputs"], tuple(steps), obj["output"])
