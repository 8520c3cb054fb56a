"""Tune the standard pipeline on a train/validation pair of annotation tables."""

from __future__ import annotations

from typing import Any, Mapping, Optional

import numpy as np

from .hyperspace import ConfigSample, SearchSpace, default_autovideo_space
from .pipeline import FittedPipeline, fit_pipeline, produce_pipeline
from .primitive import Registry
from .tuners import SearchBudget, SearchResult, TpeParams, TrialSink, run_search
from .values import Table, ValueEnvelope, ValueKind
from .zoo import build_standard_pipeline, default_registry


def table_input(table: Table):
    return [ValueEnvelope(ValueKind.TABLE, table)]


def accuracy(fitted: FittedPipeline, table: Table, registry: Optional[Registry] = None) -> float:
    out = produce_pipeline(fitted, table_input(table), registry or default_registry())
    predicted = np.array(out.payload.predicted())
    return float(np.mean(predicted == np.array(table.labels())))


class PipelineSearcher:
    """Objective = 1 - validation accuracy of the standard pipeline fit on ``train``."""

    def __init__(self, train: Table, valid: Table, algorithm: str = "toy_mlp",
                 registry: Optional[Registry] = None, fit_seed: int = 42,
                 base_config: Optional[Mapping[str, Any]] = None):
        self.train, self.valid = train, valid
        self.algorithm = algorithm
        self.registry = registry or default_registry()
        self.fit_seed = fit_seed
        self.base_config = dict(base_config or {})

    def build(self, config: Mapping[str, Any]):
        return build_standard_pipeline({"algorithm": self.algorithm, **self.base_config, **config},
                                       self.registry)

    def validation_accuracy(self, config: Mapping[str, Any]) -> float:
        fitted = fit_pipeline(self.build(config), table_input(self.train), self.registry, self.fit_seed)
        return accuracy(fitted, self.valid, self.registry)

    def objective(self, config: ConfigSample) -> float:
        return 1.0 - self.validation_accuracy(config)

    def search(self, search_space: Optional[SearchSpace] = None, config: Optional[Mapping[str, Any]] = None,
               trial_sink: Optional[TrialSink] = None) -> SearchResult:
        """``config`` keys: strategy ("tpe"), max_trials (20), seed (0), tpe (TpeParams)."""
        config = dict(config or {})
        space = search_space if search_space is not None else default_autovideo_space()
        budget = SearchBudget(config.get("max_trials", 20), config.get("seed", 0))
        return run_search(self.objective, space, config.get("strategy", "tpe"), budget,
                          config.get("tpe", TpeParams()), trial_sink)
