"""
Fitting and predicting
======================

Generate a small synthetic action dataset, extract frames, fit the standard
pipeline on the training split, save it, reload it and predict.
"""

import tempfile
from pathlib import Path

import numpy as np

from vidpipe import build_standard_pipeline, default_registry, fit_pipeline, load_fitted, produce_pipeline, save_fitted
from vidpipe import table_input
from vidpipe.data_io import SyntheticSpec, generate_synthetic_dataset, split_table
from vidpipe.zoo.annotations import extract_frames, load_annotations

work = Path(tempfile.mkdtemp())
registry = default_registry()

# four motion directions, 25 clips each; labels live in column 2
bundle = generate_synthetic_dataset(SyntheticSpec(seed=0), work)
table = load_annotations(bundle.table_path, target_index=2, media_dir=bundle.media_dir)
train, valid = split_table(table, 0.2, seed=0)
print(len(train), "training clips,", len(valid), "validation clips")

# explode every .rawvid into frame_000001.ppm ... (the reader prefers these)
extract_frames(bundle.media_dir, "rawvid")

pipeline = build_standard_pipeline({"algorithm": "toy_mlp", "load_pretrained": False})
fitted = fit_pipeline(pipeline, table_input(train), registry, seed=7)
print("fingerprint", fitted.fingerprint[:16], "...")

# the fitted pipeline is a plain file
save_fitted(fitted, work / "model.pff")
reloaded = load_fitted(work / "model.pff")

probs = produce_pipeline(reloaded, table_input(valid), registry).payload
predicted = np.array(probs.predicted())
print("validation accuracy", np.mean(predicted == np.array(valid.labels())))
print("first rows:")
for label, row in zip(predicted[:4], probs.values[:4]):
    print(" ", label, np.round(row, 3))
