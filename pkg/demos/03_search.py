"""
Searching hyperparameters
=========================

Compare the fixed default configuration with random search and TPE on one
synthetic train/validation split. The objective is 1 - validation accuracy.
"""

import tempfile
from pathlib import Path

from vidpipe import PipelineSearcher, default_autovideo_space
from vidpipe.data_io import SyntheticSpec, generate_synthetic_dataset, split_table
from vidpipe.zoo.annotations import load_annotations

work = Path(tempfile.mkdtemp())
# heavier noise than the default, so the configurations actually differ
bundle = generate_synthetic_dataset(SyntheticSpec(noise_std=40.0, seed=1), work)
table = load_annotations(bundle.table_path, 2, bundle.media_dir)
train, valid = split_table(table, 0.2, seed=1)

searcher = PipelineSearcher(train, valid, algorithm="toy_mlp", fit_seed=1)
print("default config accuracy:", searcher.validation_accuracy({}))

space = default_autovideo_space()
for name, domain in space.items():
    print(f"  {name:14s} {domain}")

# with the same seed, TPE's first 10 suggestions are the random ones; after
# that it proposes from what the good trials have in common
for strategy in ("random", "tpe"):
    result = searcher.search(space, {"strategy": strategy, "max_trials": 25, "seed": 0})
    print(f"{strategy:6s} best accuracy {1 - result.best_value:.3f} with {result.best_config}")
    print("       incumbent", [round(1 - v, 3) for v in result.incumbent_values()])
