"""Random search and a Tree-structured Parzen Estimator, plus the search loop.

Objectives are minimised. Every continuous dimension is modelled on the unit
interval (see :func:`vidpipe.hyperspace.to_unit`), so a log-uniform learning
rate and a linear momentum share the same density machinery.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .errors import (
    AllTrialsFailed,
    EmptyHistory,
    EmptySpace,
    NoCompleteTrials,
    OutOfUnitCube,
    ZeroBudget,
)
from .hyperspace import Choice, ConfigSample, Constant, SearchSpace, freeze, sample_space, to_unit

logger = logging.getLogger(__name__)

PENDING, COMPLETE, FAILED = "pending", "complete", "failed"


@dataclass
class Trial:
    id: int
    config: ConfigSample
    objective: Optional[float] = None
    status: str = PENDING
    wall_ms: int = 0

    @property
    def loss(self) -> float:
        """Objective used for ranking; failed trials rank as +inf."""
        if self.status == COMPLETE:
            return float(self.objective)
        return math.inf


@dataclass(frozen=True)
class TpeParams:
    gamma: float = 0.25
    n_startup: int = 10
    n_candidates: int = 24
    prior_weight: float = 1.0
    bandwidth_floor: float = 1e-3

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n_startup < 0 or self.n_candidates < 1:
            raise ValueError("n_startup must be >= 0 and n_candidates >= 1")
        if self.prior_weight <= 0 or self.bandwidth_floor <= 0:
            raise ValueError("prior_weight and bandwidth_floor must be positive")


@dataclass(frozen=True)
class SearchBudget:
    max_trials: int
    seed: int = 0


@dataclass
class SearchResult:
    best_config: ConfigSample
    best_value: float
    trials: List[Trial] = field(default_factory=list)

    def incumbent_values(self) -> List[float]:
        """Best objective seen after each trial (inf until the first success)."""
        out, best = [], math.inf
        for t in self.trials:
            best = min(best, t.loss)
            out.append(best)
        return out


# -- random ------------------------------------------------------------------

def suggest_random(space: SearchSpace, rng: np.random.Generator) -> ConfigSample:
    return sample_space(space, rng)


# -- TPE building blocks -----------------------------------------------------

def tpe_partition(history: Sequence[Trial], gamma: float) -> Tuple[List[Trial], List[Trial]]:
    if not history:
        raise EmptyHistory("cannot partition an empty history")
    ranked = sorted(history, key=lambda t: (t.loss, t.id))
    # round() keeps e.g. 0.1 * 30 from ceiling to 4
    n_good = max(1, math.ceil(round(gamma * len(ranked), 9)))
    return ranked[:n_good], ranked[n_good:]


def parzen_bandwidths(observations: Sequence[float], floor: float) -> np.ndarray:
    """Per-observation bandwidths, returned in the order of ``sorted(observations)``.

    Each bandwidth is the distance to the nearer neighbour in sorted order,
    where 0 and 1 act as neighbours of the extreme observations. It is then
    clipped from below by ``floor`` and by ``1 / min(100, n + 1)``; without the
    count-dependent clip, clustered observations shrink each other's kernels
    and the search stalls a little short of the optimum.
    """
    mus = np.sort(np.asarray(observations, dtype=float))
    if mus.size == 0:
        return mus
    padded = np.concatenate(([0.0], mus, [1.0]))
    left = mus - padded[:-2]
    right = padded[2:] - mus
    lower = max(floor, 1.0 / min(100, mus.size + 1))
    return np.maximum(np.minimum(left, right), lower)


class ParzenEstimator:
    """Uniform prior plus one truncated Gaussian per observation, on [0, 1]."""

    def __init__(self, observations: Sequence[float], prior_weight: float, bandwidth_floor: float):
        obs = np.asarray(observations, dtype=float)
        if obs.size and (np.any(obs < 0) or np.any(obs > 1) or not np.all(np.isfinite(obs))):
            raise OutOfUnitCube("observations must lie in [0, 1]")
        self.mus = np.sort(obs)
        self.sigmas = parzen_bandwidths(self.mus, bandwidth_floor)
        total = prior_weight + self.mus.size
        self.weights = np.concatenate(([prior_weight], np.ones(self.mus.size))) / total
        # truncation mass of each Gaussian inside [0, 1]
        self._lo = (0.0 - self.mus) / self.sigmas
        self._hi = (1.0 - self.mus) / self.sigmas
        self._log_mass = np.log(ndtr(self._hi) - ndtr(self._lo))

    def log_pdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
            raise OutOfUnitCube("density is only defined on [0, 1]")
        if self.mus.size == 0:
            return np.zeros_like(x)
        z = (x[:, None] - self.mus[None, :]) / self.sigmas[None, :]
        log_comp = -0.5 * z**2 - 0.5 * math.log(2 * math.pi) - np.log(self.sigmas) - self._log_mass
        # prior component has density 1 on [0, 1]
        log_all = np.concatenate([np.zeros((x.size, 1)), log_comp], axis=1)
        return logsumexp(log_all + np.log(self.weights)[None, :], axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        u = rng.uniform(size=n)
        out = u.copy()
        g = comp > 0
        if np.any(g):
            k = comp[g] - 1
            lo, hi = ndtr(self._lo[k]), ndtr(self._hi[k])
            z = ndtri(lo + u[g] * (hi - lo))
            out[g] = self.mus[k] + self.sigmas[k] * z
        return np.clip(out, 0.0, 1.0)


def kde_log_density(observations: Sequence[float], prior_weight: float,
                    bandwidth_floor: float, x) -> Union[float, np.ndarray]:
    """Log of the Parzen mixture density at ``x`` (scalar in, scalar out)."""
    est = ParzenEstimator(observations, prior_weight, bandwidth_floor)
    out = est.log_pdf(x)
    return float(out[0]) if np.ndim(x) == 0 else out


def categorical_weights(counts: Sequence[float], prior_weight: float) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    k = counts.size
    return (counts + prior_weight / k) / (counts.sum() + prior_weight)


@dataclass
class TpeProposal:
    candidates: List[ConfigSample]
    scores: np.ndarray
    chosen: int

    @property
    def config(self) -> ConfigSample:
        return self.candidates[self.chosen]


def _observed(trials: Iterable[Trial], name: str) -> list:
    return [t.config[name] for t in trials if name in t.config]


def tpe_propose(space: SearchSpace, history: Sequence[Trial], params: TpeParams,
                rng: np.random.Generator) -> TpeProposal:
    """Draw candidates from the good-trial density and score them by log l - log g."""
    if not space:
        raise EmptySpace("cannot search an empty space")
    finished = [t for t in history if t.status in (COMPLETE, FAILED)]
    good, bad = tpe_partition(finished, params.gamma)
    n = params.n_candidates
    columns = {}
    scores = np.zeros(n)
    for name, dom in space.items():
        if isinstance(dom, Constant):
            columns[name] = [dom.value] * n
        elif isinstance(dom, Choice):
            k = len(dom.options)
            cg = np.bincount([dom.index(v) for v in _observed(good, name)], minlength=k)
            cb = np.bincount([dom.index(v) for v in _observed(bad, name)], minlength=k)
            pl = categorical_weights(cg, params.prior_weight)
            pg = categorical_weights(cb, params.prior_weight)
            idx = rng.choice(k, size=n, p=pl)
            columns[name] = [dom.options[i] for i in idx]
            scores += np.log(pl[idx]) - np.log(pg[idx])
        else:
            lo = ParzenEstimator([to_unit(dom, v) for v in _observed(good, name)],
                                 params.prior_weight, params.bandwidth_floor)
            hi = ParzenEstimator([to_unit(dom, v) for v in _observed(bad, name)],
                                 params.prior_weight, params.bandwidth_floor)
            u = lo.sample(rng, n)
            values = [dom.from_unit(float(x)) for x in u]
            # score at the coordinate of the value actually returned
            coords = np.array([to_unit(dom, v) for v in values])
            columns[name] = values
            scores += lo.log_pdf(coords) - hi.log_pdf(coords)
    candidates = [{name: columns[name][i] for name in space} for i in range(n)]
    return TpeProposal(candidates, scores, int(np.argmax(scores)))


def suggest_tpe(space: SearchSpace, history: Sequence[Trial], params: TpeParams,
                rng: np.random.Generator) -> ConfigSample:
    if not space:
        raise EmptySpace("cannot search an empty space")
    n_complete = sum(t.status == COMPLETE for t in history)
    finished = any(t.status in (COMPLETE, FAILED) for t in history)
    if n_complete < params.n_startup or not finished:
        return suggest_random(space, rng)
    return tpe_propose(space, history, params, rng).config


# -- search loop -------------------------------------------------------------

def best_trial(trials: Sequence[Trial]) -> Trial:
    done = [t for t in trials if t.status == COMPLETE]
    if not done:
        raise NoCompleteTrials("no trial completed")
    return min(done, key=lambda t: (t.objective, t.id))


TrialSink = Callable[[Trial], None]


def run_search(objective: Callable[[ConfigSample], float], space: SearchSpace,
               strategy: str = "tpe", budget: SearchBudget = SearchBudget(20),
               params: Optional[TpeParams] = None,
               trial_sink: Optional[TrialSink] = None) -> SearchResult:
    """Sequential ask/tell loop. Exceptions and non-finite values mark a trial failed."""
    if budget.max_trials < 1:
        raise ZeroBudget(f"max_trials must be >= 1, got {budget.max_trials}")
    if strategy not in ("random", "tpe"):
        raise ValueError(f"unknown strategy {strategy!r}")
    params = params or TpeParams()
    rng = np.random.default_rng(budget.seed)
    trials: List[Trial] = []
    for i in range(budget.max_trials):
        if strategy == "random":
            config = suggest_random(space, rng)
        else:
            config = suggest_tpe(space, trials, params, rng)
        trial = Trial(i, config)
        start = time.perf_counter()
        try:
            value = float(objective(dict(config)))
        except Exception as exc:  # noqa: BLE001 - any objective failure is a failed trial
            logger.warning("trial %d failed: %s: %s", i, type(exc).__name__, exc)
            value = math.nan
        trial.wall_ms = int(round((time.perf_counter() - start) * 1000))
        if math.isfinite(value):
            trial.objective, trial.status = value, COMPLETE
        else:
            trial.objective, trial.status = math.inf, FAILED
        trials.append(trial)
        if trial_sink is not None:
            trial_sink(trial)
    try:
        best = best_trial(trials)
    except NoCompleteTrials:
        raise AllTrialsFailed(f"all {len(trials)} trials failed") from None
    return SearchResult(dict(best.config), float(best.objective), trials)


def _jsonable(value: Any) -> Any:
    value = freeze(value)
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def trial_record(trial: Trial) -> dict:
    objective = trial.objective if trial.status == COMPLETE else "inf"
    return {
        "id": trial.id,
        "config": {k: _jsonable(v) for k, v in trial.config.items()},
        "objective": objective,
        "status": trial.status,
        "wall_ms": trial.wall_ms,
    }


class JsonlTrialLog:
    """Trial sink appending one JSON object per line."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def __call__(self, trial: Trial) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(trial_record(trial)) + "\n")


def read_trial_log(path: Union[str, Path]) -> List[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
