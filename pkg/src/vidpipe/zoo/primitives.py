"""Built-in primitives: frame reading, sampling, resizing, normalisation, features, classifier."""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ShapeMismatch
from ..hyperspace import Choice, FreeText, LogUniform, Uniform
from ..primitive import Estimator, HyperparamDescriptor as HP, Primitive, PrimitiveSpec, StepContext
from ..values import ClassProbabilities, ValueEnvelope, ValueKind as K
from . import mlp, video
from .annotations import frame_files, load_video

VERSION = "0.1.0"

IMAGENET_MEAN = 0.45
IMAGENET_STD = 0.225


@lru_cache(maxsize=4096)
def _cached_video(media_dir: str, name: str, stamp) -> np.ndarray:
    frames = load_video(media_dir, name)
    frames.setflags(write=False)
    return frames


def _stamp(media_dir: Path, name: str):
    frame_dir = media_dir / Path(name).stem
    paths = frame_files(frame_dir) if frame_dir.is_dir() else [media_dir / name]
    stats = [os.stat(p) for p in paths]
    return tuple((str(p), s.st_mtime_ns, s.st_size) for p, s in zip(paths, stats))


class FrameReader(Primitive):
    def produce(self, inputs, ctx):
        table = inputs[0].payload
        if table.media_dir is None:
            raise ValueError("table carries no media directory")
        media = Path(table.media_dir)
        clips = [_cached_video(str(media), name, _stamp(media, name)) for name in table.video_column()]
        return ValueEnvelope(K.RAW_FRAMES, clips)


class SegmentSampler(Primitive):
    def produce(self, inputs, ctx):
        n = self.hyperparams["num_segments"]
        mode = video.TRAIN_RANDOM if ctx.training else video.EVAL_CENTER
        clips = [video.segment_sample(c, n, mode, ctx.rng) for c in inputs[0].payload]
        return ValueEnvelope(K.RAW_FRAMES, clips)


class FrameScaler(Primitive):
    def produce(self, inputs, ctx):
        h, w = self.hyperparams["height"], self.hyperparams["width"]
        return ValueEnvelope(K.RAW_FRAMES, [video.scale_frames(c, h, w) for c in inputs[0].payload])


class FrameNormalizer(Primitive):
    def produce(self, inputs, ctx):
        mean, std = self.hyperparams["mean"], self.hyperparams["std"]
        return ValueEnvelope(K.TENSOR_FRAMES,
                             [video.normalize_frames(c, mean, std) for c in inputs[0].payload])


class MotionFeatures(Primitive):
    def produce(self, inputs, ctx):
        rows = [video.motion_features(c) for c in inputs[0].payload]
        if len({r.shape for r in rows}) > 1:
            raise ShapeMismatch("clips yield features of different lengths; sample segments first")
        return ValueEnvelope(K.FEATURE_MATRIX, np.stack(rows) if rows else np.zeros((0, 0)))


class ToyMlpClassifier(Estimator):
    """MLP on z-scored motion features; labels come from the table's target column.

    Frame-mean features differ between classes by a few hundredths, far too
    little for the default learning rate, so inputs are standardised with
    training statistics that travel with the learned state.
    """

    def _train_hp(self) -> mlp.TrainHyperparams:
        hp = self.hyperparams
        return mlp.TrainHyperparams(
            epochs=hp["epochs"], learning_rate=hp["learning_rate"], milestones=hp["milestones"],
            decay_factor=hp["decay_factor"], weight_decay=hp["weight_decay"],
            batch_size=hp["batch_size"], momentum=hp["momentum"], dropout=hp["dropout"],
            hidden_units=hp["hidden_units"],
        )

    def fit(self, ctx: StepContext) -> None:
        features, table = (env.payload for env in self._training_inputs)
        labels = table.labels()
        self.classes = tuple(sorted(set(labels)))
        lookup = {c: i for i, c in enumerate(self.classes)}
        y = np.array([lookup[lab] for lab in labels], dtype=np.intp)
        init = None
        if self.hyperparams["load_pretrained"]:
            init, _ = mlp.load_pretrained(self.hyperparams["pretrained_path"])
        seed = int(ctx.rng.integers(2**63))
        self.scaler = mlp.FeatureScaler.fit(features)
        self.model, self.history = mlp.fit_classifier(self.scaler.transform(features), y, self._train_hp(),
                                                      seed, n_classes=len(self.classes), init=init)

    def get_state(self) -> bytes:
        return mlp.model_to_bytes(self.model, self.classes, self.scaler)

    def set_state(self, blob: bytes) -> None:
        self.model, self.classes, self.scaler = mlp.model_from_bytes(blob)

    def produce(self, inputs: Sequence[ValueEnvelope], ctx):
        x = inputs[0].payload
        if self.scaler is not None:
            x = self.scaler.transform(x)
        probs = mlp.predict_proba(self.model, x)
        return ValueEnvelope(K.PROBABILITIES, ClassProbabilities(probs, self.classes))


SPECS = (
    (PrimitiveSpec("zoo.frame_reader", VERSION, "loader", (K.TABLE,), K.RAW_FRAMES,
                   (HP("ext", Choice(("rawvid",)), "rawvid", tunable=False),)), FrameReader),
    (PrimitiveSpec("zoo.segment_sample", VERSION, "transformer", (K.RAW_FRAMES,), K.RAW_FRAMES,
                   (HP("num_segments", Choice((8, 16, 32)), 16),)), SegmentSampler),
    (PrimitiveSpec("zoo.scale_frames", VERSION, "transformer", (K.RAW_FRAMES,), K.RAW_FRAMES,
                   (HP("height", Choice((8, 16, 32, 64, 112, 224)), 16, tunable=False),
                    HP("width", Choice((8, 16, 32, 64, 112, 224)), 16, tunable=False))), FrameScaler),
    (PrimitiveSpec("zoo.normalize_frames", VERSION, "transformer", (K.RAW_FRAMES,), K.TENSOR_FRAMES,
                   (HP("mean", Uniform(0.0, 1.0), IMAGENET_MEAN, tunable=False),
                    HP("std", LogUniform(1e-3, 10.0), IMAGENET_STD, tunable=False))), FrameNormalizer),
    (PrimitiveSpec("zoo.motion_features", VERSION, "transformer", (K.TENSOR_FRAMES,), K.FEATURE_MATRIX),
     MotionFeatures),
    (PrimitiveSpec("zoo.toy_mlp", VERSION, "estimator", (K.FEATURE_MATRIX, K.TABLE), K.PROBABILITIES, (
        HP("epochs", Choice(tuple(range(0, 201))), 50, tunable=False),
        HP("learning_rate", LogUniform(1e-4, 1e-3), 0.001),
        HP("milestones", Choice(((20, 40), (10, 20), (5, 10), (2, 4), ())), (20, 40), tunable=False),
        HP("decay_factor", Uniform(1.0, 100.0), 10.0, tunable=False),
        HP("weight_decay", Uniform(0.0, 1e-2), 5e-4),
        HP("batch_size", Choice((1, 2, 4, 8, 16, 32, 64)), 4),
        HP("momentum", Uniform(0.0, 0.99), 0.9),
        HP("dropout", Uniform(0.0, 0.9), 0.5),
        HP("hidden_units", Choice((8, 16, 32, 64, 128)), 32),
        HP("load_pretrained", Choice((False, True)), False, tunable=False),
        HP("pretrained_path", FreeText(), "", tunable=False),
    ), requires_fit=True), ToyMlpClassifier),
)
