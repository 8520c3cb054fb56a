"""Primitive metadata, the primitive base classes, and the registry."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Sequence, Tuple, Type

import numpy as np

from .errors import DuplicatePrimitive, MalformedSpec, UnknownPrimitive
from .hyperspace import Choice, Constant, FreeText, LogUniform, Uniform, freeze
from .values import ValueEnvelope, ValueKind

ROLES = ("loader", "transformer", "estimator")
_SEMVER = re.compile(r"^\d+\.\d+\.\d+$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)+$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class HyperparamDescriptor:
    name: str
    domain: Any
    default: Any
    tunable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "default", freeze(self.default))


@dataclass(frozen=True)
class PrimitiveSpec:
    id: str
    version: str
    role: str
    input_kinds: Tuple[ValueKind, ...]
    output_kind: ValueKind
    hyperparams: Tuple[HyperparamDescriptor, ...] = ()
    requires_fit: bool = False

    @property
    def key(self) -> Tuple[str, str]:
        return (self.id, self.version)

    def hyperparam(self, name: str) -> HyperparamDescriptor:
        for hp in self.hyperparams:
            if hp.name == name:
                return hp
        raise KeyError(name)

    def defaults(self) -> Dict[str, Any]:
        return {hp.name: hp.default for hp in self.hyperparams}


def check_spec(spec: PrimitiveSpec) -> None:
    """Raise MalformedSpec unless every PrimitiveSpec invariant holds."""
    if not _NAME.match(spec.id):
        raise MalformedSpec(f"primitive id {spec.id!r} must be a dotted namespaced name")
    if not _SEMVER.match(spec.version):
        raise MalformedSpec(f"version {spec.version!r} is not semver")
    if spec.role not in ROLES:
        raise MalformedSpec(f"role must be one of {ROLES}, got {spec.role!r}")
    if spec.requires_fit != (spec.role == "estimator"):
        raise MalformedSpec("estimators, and only estimators, require fit")
    for k in (*spec.input_kinds, spec.output_kind):
        if not isinstance(k, ValueKind):
            raise MalformedSpec(f"unknown value kind {k!r}")
    seen = set()
    for hp in spec.hyperparams:
        if not _IDENT.match(hp.name):
            raise MalformedSpec(f"hyperparameter name {hp.name!r} is not an identifier")
        if hp.name in seen:
            raise MalformedSpec(f"duplicate hyperparameter {hp.name!r}")
        seen.add(hp.name)
        if not isinstance(hp.domain, (Uniform, LogUniform, Choice, Constant, FreeText)):
            raise MalformedSpec(f"{hp.name}: unsupported domain {hp.domain!r}")
        if hp.tunable and isinstance(hp.domain, FreeText):
            raise MalformedSpec(f"{hp.name}: free-text hyperparameters cannot be tunable")
        if not hp.domain.contains(hp.default):
            raise MalformedSpec(f"{hp.name}: default {hp.default!r} outside {hp.domain}")


@dataclass
class StepContext:
    step_index: int
    training: bool
    rng: np.random.Generator


class Primitive:
    """A stateless step: ``produce`` maps input envelopes to one output envelope."""

    def __init__(self, hyperparams: Dict[str, Any]):
        self.hyperparams = dict(hyperparams)

    def produce(self, inputs: Sequence[ValueEnvelope], ctx: StepContext) -> ValueEnvelope:
        raise NotImplementedError


class Estimator(Primitive):
    """A step with learned state, serialised to bytes between fit and produce."""

    def set_training_data(self, inputs: Sequence[ValueEnvelope]) -> None:
        self._training_inputs = list(inputs)

    def fit(self, ctx: StepContext) -> None:
        raise NotImplementedError

    def get_state(self) -> bytes:
        raise NotImplementedError

    def set_state(self, blob: bytes) -> None:
        raise NotImplementedError


@dataclass
class Registry:
    _entries: Dict[Tuple[str, str], Tuple[PrimitiveSpec, Type[Primitive]]] = field(default_factory=dict)
    _frozen: bool = False

    def register(self, spec: PrimitiveSpec, impl: Type[Primitive]) -> "Registry":
        if self._frozen:
            raise RuntimeError("registry is frozen")
        check_spec(spec)
        if spec.key in self._entries:
            raise DuplicatePrimitive(f"{spec.id} {spec.version} already registered")
        if not callable(getattr(impl, "produce", None)):
            raise MalformedSpec(f"{spec.id}: implementation has no produce()")
        if spec.requires_fit and not all(
                callable(getattr(impl, m, None)) for m in ("set_training_data", "fit", "get_state", "set_state")):
            raise MalformedSpec(f"{spec.id}: estimator implementation lacks fit/state methods")
        self._entries[spec.key] = (spec, impl)
        return self

    def freeze(self) -> "Registry":
        self._frozen = True
        return self

    def __contains__(self, key) -> bool:
        return tuple(key) in self._entries

    def __iter__(self) -> Iterator[PrimitiveSpec]:
        return (spec for spec, _ in self._entries.values())

    def get(self, id: str, version: str) -> PrimitiveSpec:
        return self._lookup(id, version)[0]

    def implementation(self, id: str, version: str) -> Type[Primitive]:
        return self._lookup(id, version)[1]

    def _lookup(self, id: str, version: str):
        try:
            return self._entries[(id, version)]
        except KeyError:
            raise UnknownPrimitive(f"{id} {version} is not registered") from None

    def estimators(self) -> List[PrimitiveSpec]:
        return [s for s in self if s.role == "estimator"]


def register_primitive(registry: Registry, spec: PrimitiveSpec, impl: Type[Primitive]) -> Registry:
    return registry.register(spec, impl)
