"""Parameter domains, search spaces and the unit-interval coordinate.

A search space is a plain insertion-ordered ``dict`` mapping a parameter
name to a domain. Iteration order fixes the order in which random draws are
consumed, so two spaces with the same entries in a different order sample
differently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import numpy as np

from .errors import EmptySpace, MalformedSpace, OutOfDomain


def freeze(value: Any) -> Any:
    """Turn JSON lists into tuples (recursively) so values are hashable/comparable."""
    if isinstance(value, (list, tuple)):
        return tuple(freeze(v) for v in value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


def _same(a: Any, b: Any) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return freeze(a) == freeze(b)


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (_is_real(self.low) and _is_real(self.high)):
            raise MalformedSpace(f"uniform bounds must be numbers, got {self.low!r}, {self.high!r}")
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or not self.low < self.high:
            raise MalformedSpace(f"uniform needs finite low < high, got [{self.low}, {self.high}]")

    def contains(self, value: Any) -> bool:
        return _is_real(value) and math.isfinite(value) and self.low <= value <= self.high

    def sample(self, rng: np.random.Generator) -> float:
        v = float(rng.uniform(self.low, self.high))
        return v if v < self.high else float(np.nextafter(self.high, self.low))

    def to_unit(self, value: float) -> float:
        return (value - self.low) / (self.high - self.low)

    def from_unit(self, u: float) -> float:
        v = self.low + u * (self.high - self.low)
        return float(min(max(v, self.low), self.high))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not (_is_real(self.low) and _is_real(self.high)):
            raise MalformedSpace(f"loguniform bounds must be numbers, got {self.low!r}, {self.high!r}")
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or not 0 < self.low < self.high:
            raise MalformedSpace(f"loguniform needs finite 0 < low < high, got [{self.low}, {self.high}]")

    def contains(self, value: Any) -> bool:
        return _is_real(value) and math.isfinite(value) and self.low <= value <= self.high

    def sample(self, rng: np.random.Generator) -> float:
        v = math.exp(float(rng.uniform(math.log(self.low), math.log(self.high))))
        # exp(log(x)) can land a ulp outside the interval
        if v >= self.high:
            v = float(np.nextafter(self.high, self.low))
        return max(v, self.low)

    def to_unit(self, value: float) -> float:
        return (math.log(value) - math.log(self.low)) / (math.log(self.high) - math.log(self.low))

    def from_unit(self, u: float) -> float:
        v = math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low)))
        return float(min(max(v, self.low), self.high))


@dataclass(frozen=True)
class Choice:
    options: tuple

    def __post_init__(self):
        opts = freeze(tuple(self.options))
        object.__setattr__(self, "options", opts)
        if not opts:
            raise MalformedSpace("choice needs at least one option")
        for i, a in enumerate(opts):
            if any(_same(a, b) for b in opts[i + 1:]):
                raise MalformedSpace(f"choice options must be distinct, {a!r} repeats")

    def index(self, value: Any) -> int:
        for i, o in enumerate(self.options):
            if _same(value, o):
                return i
        raise OutOfDomain(f"{value!r} is not one of {self.options!r}")

    def contains(self, value: Any) -> bool:
        return any(_same(value, o) for o in self.options)

    def sample(self, rng: np.random.Generator) -> Any:
        return self.options[int(rng.integers(len(self.options)))]

    def to_unit(self, value: Any) -> float:
        k = len(self.options)
        return self.index(value) / (k - 1) if k > 1 else 0.0

    def from_unit(self, u: float) -> Any:
        k = len(self.options)
        return self.options[min(int(math.floor(u * (k - 1) + 0.5)), k - 1)]


@dataclass(frozen=True)
class Constant:
    value: Any

    def __post_init__(self):
        object.__setattr__(self, "value", freeze(self.value))

    def contains(self, value: Any) -> bool:
        return _same(value, self.value)

    def sample(self, rng: np.random.Generator) -> Any:
        return self.value

    def to_unit(self, value: Any) -> float:
        return 0.0

    def from_unit(self, u: float) -> Any:
        return self.value


@dataclass(frozen=True)
class FreeText:
    """Any string. Only for untunable primitive settings such as file paths."""

    def contains(self, value: Any) -> bool:
        return isinstance(value, str)

    def sample(self, rng):
        raise MalformedSpace("free-text domains cannot be sampled")

    def to_unit(self, value):
        raise MalformedSpace("free-text domains have no unit coordinate")

    from_unit = to_unit


ParamDomain = Union[Uniform, LogUniform, Choice, Constant]
SearchSpace = Dict[str, ParamDomain]
ConfigSample = Dict[str, Any]

SEARCHABLE = (Uniform, LogUniform, Choice, Constant)


def sample_space(space: SearchSpace, rng: np.random.Generator) -> ConfigSample:
    if not space:
        raise EmptySpace("cannot sample an empty search space")
    return {name: dom.sample(rng) for name, dom in space.items()}


def contains(space: SearchSpace, config: Mapping[str, Any]) -> bool:
    if set(space) != set(config):
        return False
    return all(dom.contains(config[name]) for name, dom in space.items())


def to_unit(domain: ParamDomain, value: Any) -> float:
    if not domain.contains(value):
        raise OutOfDomain(f"{value!r} not in {domain}")
    return float(min(max(domain.to_unit(value), 0.0), 1.0))


def from_unit(domain: ParamDomain, u: float) -> Any:
    if not (0.0 <= u <= 1.0):
        raise OutOfDomain(f"unit coordinate {u} outside [0, 1]")
    return domain.from_unit(u)


def default_autovideo_space() -> SearchSpace:
    """The four-dimensional space used for the tuner comparison runs."""
    return {
        "learning_rate": LogUniform(1e-4, 1e-3),
        "momentum": Uniform(0.9, 0.99),
        "weight_decay": LogUniform(5e-4, 1e-3),
        "num_segments": Choice((8, 16, 32)),
    }


# -- JSON form ---------------------------------------------------------------

def domain_to_json(domain: ParamDomain) -> dict:
    if isinstance(domain, Uniform):
        return {"type": "uniform", "low": domain.low, "high": domain.high}
    if isinstance(domain, LogUniform):
        return {"type": "loguniform", "low": domain.low, "high": domain.high}
    if isinstance(domain, Choice):
        return {"type": "choice", "options": _thaw(domain.options)}
    if isinstance(domain, Constant):
        return {"type": "constant", "value": _thaw(domain.value)}
    raise MalformedSpace(f"{domain!r} has no JSON form")


def domain_from_json(obj: Any, name: str = "?") -> ParamDomain:
    if not isinstance(obj, dict) or "type" not in obj:
        raise MalformedSpace(f"{name}: expected an object with a 'type' field")
    kind = obj["type"]
    fields = {
        "uniform": {"type", "low", "high"},
        "loguniform": {"type", "low", "high"},
        "choice": {"type", "options"},
        "constant": {"type", "value"},
    }
    if kind not in fields:
        raise MalformedSpace(f"{name}: unknown domain type {kind!r}")
    if set(obj) != fields[kind]:
        raise MalformedSpace(f"{name}: {kind} expects fields {sorted(fields[kind])}, got {sorted(obj)}")
    if kind == "uniform":
        return Uniform(obj["low"], obj["high"])
    if kind == "loguniform":
        return LogUniform(obj["low"], obj["high"])
    if kind == "choice":
        if not isinstance(obj["options"], list):
            raise MalformedSpace(f"{name}: choice options must be a list")
        return Choice(tuple(obj["options"]))
    return Constant(obj["value"])


def _thaw(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


def space_to_json(space: SearchSpace) -> str:
    return json.dumps({k: domain_to_json(d) for k, d in space.items()}, indent=2)


def space_from_json(text: str) -> SearchSpace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSpace(f"search space is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not obj:
        raise MalformedSpace("search space must be a non-empty JSON object")
    return {name: domain_from_json(spec, name) for name, spec in obj.items()}


def load_space(path: Union[str, Path]) -> SearchSpace:
    return space_from_json(Path(path).read_text(encoding="utf-8"))
