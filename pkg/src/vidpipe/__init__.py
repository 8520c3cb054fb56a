"""Primitives, DAG pipelines and hyperparameter tuners for video action recognition.

Typical use::

    from vidpipe import build_standard_pipeline, default_registry, fit_pipeline, produce_pipeline, table_input
    from vidpipe.zoo.annotations import load_annotations, extract_frames

    table = load_annotations("train.csv", target_index=2, media_dir="media")
    extract_frames("media", "rawvid")
    pipeline = build_standard_pipeline({"algorithm": "toy_mlp", "load_pretrained": False})
    fitted = fit_pipeline(pipeline, table_input(table), default_registry(), seed=7)
"""

from .description import PipelineDescription, StepDescription, deserialize_pipeline, serialize_pipeline
from .hyperspace import (
    Choice,
    Constant,
    LogUniform,
    Uniform,
    contains,
    default_autovideo_space,
    from_unit,
    sample_space,
    to_unit,
)
from .pipeline import (
    FittedPipeline,
    ValidationReport,
    bind_config,
    fit_pipeline,
    load_fitted,
    produce_pipeline,
    save_fitted,
    validate_pipeline,
)
from .primitive import Estimator, HyperparamDescriptor, Primitive, PrimitiveSpec, Registry, register_primitive
from .searcher import PipelineSearcher, accuracy, table_input
from .tuners import SearchBudget, SearchResult, TpeParams, Trial, run_search, suggest_random, suggest_tpe
from .values import ClassProbabilities, Table, ValueEnvelope, ValueKind
from .zoo import STANDARD_ALIASES, build_registry, build_standard_pipeline, default_registry

__version__ = "0.1.0"

__all__ = [
    "PipelineDescription", "StepDescription", "deserialize_pipeline", "serialize_pipeline",
    "Choice", "Constant", "LogUniform", "Uniform", "contains", "default_autovideo_space", "from_unit",
    "sample_space", "to_unit",
    "FittedPipeline", "ValidationReport", "bind_config", "fit_pipeline", "load_fitted", "produce_pipeline",
    "save_fitted", "validate_pipeline",
    "Estimator", "HyperparamDescriptor", "Primitive", "PrimitiveSpec", "Registry", "register_primitive",
    "PipelineSearcher", "accuracy", "table_input",
    "SearchBudget", "SearchResult", "TpeParams", "Trial", "run_search", "suggest_random", "suggest_tpe",
    "ClassProbabilities", "Table", "ValueEnvelope", "ValueKind",
    "STANDARD_ALIASES", "build_registry", "build_standard_pipeline", "default_registry",
]
