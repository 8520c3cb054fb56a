"""Built-in primitive zoo and the standard six-step action-recognition pipeline."""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from typing import Any, Dict, Mapping, Optional

from ..description import PipelineDescription, StepDescription
from ..errors import MissingPretrainedPath, UnknownAlgorithm
from ..pipeline import bind_config
from ..primitive import Registry
from .primitives import SPECS, VERSION

# accepted only once a plugin registers an estimator under one of these names
RESERVED_ALGORITHMS = ("tsn", "tsm", "i3d", "eco", "c3d", "r2p1d", "r3d")

CLASSIFIER_STEP = 5
STANDARD_ALIASES: Dict[str, str] = {
    "num_segments": "1.num_segments",
    "height": "2.height",
    "width": "2.width",
    "mean": "3.mean",
    "std": "3.std",
    **{name: f"{CLASSIFIER_STEP}.{name}" for name in (
        "epochs", "learning_rate", "milestones", "decay_factor", "weight_decay", "batch_size",
        "momentum", "dropout", "hidden_units", "load_pretrained", "pretrained_path")},
}


def build_registry() -> Registry:
    """A fresh, still-open registry holding the built-in primitives (extend, then freeze)."""
    registry = Registry()
    for spec, impl in SPECS:
        registry.register(spec, impl)
    return registry


@lru_cache(maxsize=1)
def default_registry() -> Registry:
    return build_registry().freeze()


def find_estimator(registry: Registry, algorithm: str):
    matches = [s for s in registry.estimators() if s.id.rsplit(".", 1)[-1] == algorithm]
    if not matches:
        hint = " (reserved; needs a plugin)" if algorithm in RESERVED_ALGORITHMS else ""
        raise UnknownAlgorithm(f"no estimator registered for algorithm {algorithm!r}{hint}")
    return max(matches, key=lambda s: tuple(int(p) for p in s.version.split(".")))


def build_standard_pipeline(config: Mapping[str, Any], registry: Optional[Registry] = None) -> PipelineDescription:
    """frame_reader -> segment_sample -> scale_frames -> normalize_frames -> motion_features -> classifier.

    ``config`` needs ``algorithm``; ``load_pretrained``/``pretrained_path`` pick
    the classifier's initial weights, and every other key is an override given
    either as an alias from ``STANDARD_ALIASES`` or as ``"<step>.<name>"``.
    """
    registry = registry or default_registry()
    config = dict(config)
    algorithm = config.pop("algorithm", None)
    if algorithm is None:
        raise UnknownAlgorithm("config needs an 'algorithm'")
    estimator = find_estimator(registry, algorithm)
    load_pretrained = bool(config.pop("load_pretrained", False))
    pretrained_path = config.pop("pretrained_path", None)
    if load_pretrained and not pretrained_path:
        raise MissingPretrainedPath("load_pretrained=True needs a pretrained_path")

    ident = json.dumps({"algorithm": algorithm, "version": estimator.version}, sort_keys=True)
    desc = PipelineDescription(
        pipeline_id=hashlib.md5(ident.encode("utf-8")).hexdigest(),
        num_inputs=1,
        steps=(
            StepDescription(("zoo.frame_reader", VERSION), {}, ("inputs.0",)),
            StepDescription(("zoo.segment_sample", VERSION), {"num_segments": 16}, ("steps.0",)),
            StepDescription(("zoo.scale_frames", VERSION), {}, ("steps.1",)),
            StepDescription(("zoo.normalize_frames", VERSION), {}, ("steps.2",)),
            StepDescription(("zoo.motion_features", VERSION), {}, ("steps.3",)),
            StepDescription(estimator.key, {}, ("steps.4", "inputs.0")),
        ),
        output="steps.5",
    )
    if load_pretrained:
        config[f"{CLASSIFIER_STEP}.load_pretrained"] = True
        config[f"{CLASSIFIER_STEP}.pretrained_path"] = str(pretrained_path)
    return bind_config(desc, config, registry, STANDARD_ALIASES)


__all__ = [
    "RESERVED_ALGORITHMS", "STANDARD_ALIASES", "build_registry", "default_registry",
    "build_standard_pipeline", "find_estimator",
]
