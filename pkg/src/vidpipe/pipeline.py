"""Validation, configuration binding and fit/produce execution of pipelines."""

from __future__ import annotations

import hashlib
import io
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .description import PipelineDescription, StepDescription, parse_ref, serialize_pipeline, deserialize_pipeline
from .errors import (
    ArityMismatch,
    CorruptArtifact,
    OutOfDomainValue,
    ParseError,
    StepExecutionFailed,
    UnknownKey,
    UnknownPrimitive,
    ValidationFailed,
)
from .hyperspace import freeze
from .primitive import PrimitiveSpec, Registry, StepContext
from .values import ValueEnvelope, ValueKind

logger = logging.getLogger(__name__)

MAGIC = b"PFF1"
ARTIFACT_VERSION = 1
MAX_SEED = 2**64


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    step_index: Optional[int]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: Tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> List[str]:
        return [i.code for i in self.issues]


def _resolve_spec(step: StepDescription, registry: Registry) -> Optional[PrimitiveSpec]:
    try:
        return registry.get(*step.primitive)
    except UnknownPrimitive:
        return None


def validate_pipeline(desc: PipelineDescription, registry: Registry) -> ValidationReport:
    issues: List[ValidationIssue] = []

    def add(code, idx, msg):
        issues.append(ValidationIssue(code, idx, msg))

    specs: List[Optional[PrimitiveSpec]] = []
    for i, step in enumerate(desc.steps):
        spec = _resolve_spec(step, registry)
        specs.append(spec)
        if spec is None:
            add("UnknownPrimitive", i, f"{step.primitive[0]} {step.primitive[1]} is not registered")
            continue
        if len(step.inputs) != len(spec.input_kinds):
            add("InputArity", i, f"{spec.id} takes {len(spec.input_kinds)} inputs, got {len(step.inputs)}")
        for j, ref in enumerate(step.inputs):
            try:
                space, k = parse_ref(ref)
            except ValueError:
                add("BadReference", i, f"malformed reference {ref!r}")
                continue
            if space == "inputs":
                if k >= desc.num_inputs:
                    add("BadReference", i, f"{ref} but pipeline has {desc.num_inputs} inputs")
                continue
            if k >= i:
                add("ForwardReference", i, f"step {i} references {ref}")
                continue
            producer = specs[k]
            if producer is not None and j < len(spec.input_kinds) and producer.output_kind != spec.input_kinds[j]:
                add("KindMismatch", i, f"input {j} expects {spec.input_kinds[j].value}, "
                                       f"{ref} produces {producer.output_kind.value}")
        for name, value in step.bindings.items():
            try:
                hp = spec.hyperparam(name)
            except KeyError:
                add("UnknownHyperparam", i, f"{spec.id} has no hyperparameter {name!r}")
                continue
            if not hp.domain.contains(value):
                add("OutOfDomainBinding", i, f"{name}={value!r} outside {hp.domain}")
    try:
        space, k = parse_ref(desc.output)
        if space != "steps" or k >= len(desc.steps):
            add("BadOutput", None, f"output {desc.output!r} does not name an existing step")
    except ValueError:
        add("BadOutput", None, f"malformed output reference {desc.output!r}")
    return ValidationReport(tuple(issues))


def bind_config(desc: PipelineDescription, config: Mapping[str, Any], registry: Registry,
                aliases: Optional[Mapping[str, str]] = None) -> PipelineDescription:
    """Return a copy of ``desc`` with ``"<step>.<name>"`` (or aliased) bindings overwritten."""
    aliases = aliases or {}
    updates: Dict[int, Dict[str, Any]] = {}
    for key, value in config.items():
        target = aliases.get(key, key)
        idx_text, _, name = target.partition(".")
        if not idx_text.isdigit() or not name or int(idx_text) >= len(desc.steps):
            raise UnknownKey(f"config key {key!r} does not name a step hyperparameter")
        idx = int(idx_text)
        spec = registry.get(*desc.steps[idx].primitive)
        try:
            hp = spec.hyperparam(name)
        except KeyError:
            raise UnknownKey(f"step {idx} ({spec.id}) has no hyperparameter {name!r}") from None
        if not hp.domain.contains(value):
            raise OutOfDomainValue(f"{key}={value!r} outside {hp.domain}")
        updates.setdefault(idx, {})[name] = freeze(value)
    steps = []
    for i, step in enumerate(desc.steps):
        if i in updates:
            step = StepDescription(step.primitive, {**step.bindings, **updates[i]}, step.inputs)
        steps.append(step)
    return PipelineDescription(desc.pipeline_id, desc.num_inputs, tuple(steps), desc.output)


# -- execution ---------------------------------------------------------------

def step_rng(seed: int, step_index: int) -> np.random.Generator:
    """Independent stream per step: adding a step later leaves earlier streams alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(step_index,)))


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


@dataclass(frozen=True)
class FittedPipeline:
    description: PipelineDescription
    step_states: Tuple[bytes, ...]
    fit_seed: int
    fingerprint: str = field(default="")

    def __post_init__(self):
        if len(self.step_states) != len(self.description.steps):
            raise ValueError("one state blob per step is required")
        object.__setattr__(self, "step_states", tuple(bytes(s) for s in self.step_states))
        if not self.fingerprint:
            object.__setattr__(self, "fingerprint", hashlib.sha256(_artifact_body(self)).hexdigest())


def _resolve_inputs(step: StepDescription, inputs: Sequence[ValueEnvelope],
                    outputs: Dict[int, ValueEnvelope]) -> List[ValueEnvelope]:
    resolved = []
    for ref in step.inputs:
        space, k = parse_ref(ref)
        resolved.append(inputs[k] if space == "inputs" else outputs[k])
    return resolved


def _last_use(desc: PipelineDescription) -> Dict[int, int]:
    """Step index -> index of the last step reading its output."""
    last: Dict[int, int] = {}
    for i, step in enumerate(desc.steps):
        for ref in step.inputs:
            space, k = parse_ref(ref)
            if space == "steps":
                last[k] = i
    return last


Trace = Optional[Callable[[int, str], None]]


def _execute(desc, inputs, registry, seed, training, states, trace):
    out_index = parse_ref(desc.output)[1]
    last = _last_use(desc)
    outputs: Dict[int, ValueEnvelope] = {}
    learned: List[bytes] = []
    for i, step in enumerate(desc.steps):
        spec = registry.get(*step.primitive)
        impl = registry.implementation(*step.primitive)
        hyperparams = {**spec.defaults(), **step.bindings}
        ctx = StepContext(i, training, step_rng(seed, i))
        if trace is not None:
            trace(i, spec.id)
        try:
            args = _resolve_inputs(step, inputs, outputs)
            for j, (env, kind) in enumerate(zip(args, spec.input_kinds)):
                if env.kind != kind:
                    raise TypeError(f"input {j} is {env.kind.value}, expected {kind.value}")
            prim = impl(hyperparams)
            blob = b""
            if spec.requires_fit:
                if training:
                    prim.set_training_data(args)
                    prim.fit(ctx)
                    blob = prim.get_state()
                else:
                    prim.set_state(states[i])
            result = prim.produce(args, ctx)
            if not isinstance(result, ValueEnvelope) or result.kind != spec.output_kind:
                raise TypeError(f"{spec.id} must produce {spec.output_kind.value}")
        except Exception as exc:
            raise StepExecutionFailed(i, exc) from exc
        learned.append(blob)
        outputs[i] = result
        # drop intermediates nobody reads any more
        for k, j in last.items():
            if j == i and k != out_index:
                outputs.pop(k, None)
    return outputs[out_index], learned


def _check_arity(desc: PipelineDescription, inputs: Sequence[ValueEnvelope]) -> None:
    if len(inputs) != desc.num_inputs:
        issue = ValidationIssue("ArityMismatch", None,
                                f"pipeline takes {desc.num_inputs} inputs, got {len(inputs)}")
        raise ArityMismatch(ValidationReport((issue,)))


def fit_pipeline(desc: PipelineDescription, inputs: Sequence[ValueEnvelope], registry: Registry,
                 seed: int, trace: Trace = None) -> FittedPipeline:
    report = validate_pipeline(desc, registry)
    if not report.ok:
        raise ValidationFailed(report)
    _check_arity(desc, inputs)
    seed = _check_seed(seed)
    _, states = _execute(desc, list(inputs), registry, seed, True, None, trace)
    return FittedPipeline(desc, tuple(states), seed)


def produce_pipeline(fitted: FittedPipeline, inputs: Sequence[ValueEnvelope], registry: Registry,
                     trace: Trace = None) -> ValueEnvelope:
    _check_arity(fitted.description, inputs)
    out, _ = _execute(fitted.description, list(inputs), registry, fitted.fit_seed, False,
                      fitted.step_states, trace)
    tables = [env for env in inputs if env.kind is ValueKind.TABLE]
    if tables and out.kind is ValueKind.PROBABILITIES and len(out.payload) != len(tables[0].payload):
        raise StepExecutionFailed(parse_ref(fitted.description.output)[1],
                                  ValueError("prediction rows do not match input rows"))
    return out


# -- fitted artifact container -----------------------------------------------
# magic | u16 version | u64 seed | u32 len + description | (u32 len + blob) per step | sha256

def _artifact_body(fitted: FittedPipeline) -> bytes:
    text = serialize_pipeline(fitted.description).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HQ", ARTIFACT_VERSION, fitted.fit_seed))
    buf.write(struct.pack("<I", len(text)))
    buf.write(text)
    for blob in fitted.step_states:
        buf.write(struct.pack("<I", len(blob)))
        buf.write(blob)
    return buf.getvalue()


def fitted_to_bytes(fitted: FittedPipeline) -> bytes:
    body = _artifact_body(fitted)
    return body + hashlib.sha256(body).digest()


def fitted_from_bytes(data: bytes) -> FittedPipeline:
    if data[:4] != MAGIC:
        raise CorruptArtifact("not a fitted-pipeline artifact (bad magic tag)")
    if len(data) < 4 + 2 + 8 + 4 + 32:
        raise CorruptArtifact("artifact too short")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptArtifact("content hash mismatch")
    version, seed = struct.unpack_from("<HQ", body, 4)
    if version != ARTIFACT_VERSION:
        raise CorruptArtifact(f"unsupported artifact version {version}")
    pos = 14
    try:
        (n,) = struct.unpack_from("<I", body, pos)
        pos += 4
        desc = deserialize_pipeline(body[pos:pos + n].decode("utf-8"))
        pos += n
        states = []
        for _ in desc.steps:
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            if pos + n > len(body):
                raise CorruptArtifact("state blob runs past end of artifact")
            states.append(body[pos:pos + n])
            pos += n
    except (struct.error, UnicodeDecodeError, ParseError) as exc:
        raise CorruptArtifact(f"malformed artifact: {exc}") from None
    if pos != len(body):
        raise CorruptArtifact("trailing bytes after last state blob")
    fitted = FittedPipeline(desc, tuple(states), seed)
    assert fitted.fingerprint == digest.hex()
    return fitted


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_fitted(fitted: FittedPipeline, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, fitted_to_bytes(fitted))


def load_fitted(path: Union[str, Path]) -> FittedPipeline:
    return fitted_from_bytes(Path(path).read_bytes())
