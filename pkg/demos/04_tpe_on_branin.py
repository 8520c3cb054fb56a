"""
TPE on the Branin function
==========================

A cheap benchmark with a known minimum (0.397887) shows what the tuner
does away from video data.
"""

import statistics

import numpy as np

from vidpipe.benchmarks import BRANIN_MINIMUM, branin_objective, branin_space
from vidpipe.tuners import SearchBudget, TpeParams, run_search, tpe_propose

results = {}
for strategy in ("random", "tpe"):
    best = [run_search(branin_objective, branin_space(), strategy, SearchBudget(50, seed)).best_value
            for seed in range(10)]
    results[strategy] = best
    print(f"{strategy:6s} median best {statistics.median(best):.4f}  worst {max(best):.4f}")
print("known minimum", BRANIN_MINIMUM)

# one proposal, opened up: candidates come from the good-trial density and
# the winner maximises log l - log g
trials = run_search(branin_objective, branin_space(), "tpe", SearchBudget(30, seed=3)).trials
proposal = tpe_propose(branin_space(), trials, TpeParams(), np.random.default_rng(0))
order = np.argsort(-proposal.scores)[:5]
for i in order:
    c = proposal.candidates[i]
    print(f"score {proposal.scores[i]:7.3f}  x={c['x']:7.3f} y={c['y']:7.3f}  f={branin_objective(c):.3f}")
