import numpy as np
import pytest

from vidpipe.errors import MissingPretrainedPath, UnknownAlgorithm, UnknownKey
from vidpipe.pipeline import validate_pipeline
from vidpipe.primitive import Estimator, PrimitiveSpec, StepContext
from vidpipe.values import ValueEnvelope, ValueKind
from vidpipe.zoo import build_registry, build_standard_pipeline, find_estimator
from vidpipe.zoo.primitives import SegmentSampler


def test_standard_pipeline_shape(registry):
    desc = build_standard_pipeline({"algorithm": "toy_mlp"})
    assert len(desc.steps) == 6 and desc.output == "steps.5" and desc.num_inputs == 1
    assert [s.primitive[0] for s in desc.steps] == [
        "zoo.frame_reader", "zoo.segment_sample", "zoo.scale_frames",
        "zoo.normalize_frames", "zoo.motion_features", "zoo.toy_mlp"]
    assert desc.steps[1].bindings["num_segments"] == 16
    assert validate_pipeline(desc, registry).ok


def test_defaults_of_classifier(registry):
    spec = registry.get("zoo.toy_mlp", "0.1.0")
    d = spec.defaults()
    assert (d["epochs"], d["learning_rate"], d["milestones"], d["decay_factor"]) == (50, 0.001, (20, 40), 10.0)
    assert (d["weight_decay"], d["batch_size"], d["momentum"], d["dropout"]) == (5e-4, 4, 0.9, 0.5)
    assert spec.requires_fit and spec.role == "estimator"


def test_pipeline_id_stable():
    a = build_standard_pipeline({"algorithm": "toy_mlp"})
    b = build_standard_pipeline({"algorithm": "toy_mlp", "momentum": 0.95})
    assert a.pipeline_id == b.pipeline_id and len(a.pipeline_id) == 32


def test_overrides_applied():
    desc = build_standard_pipeline({"algorithm": "toy_mlp", "num_segments": 8, "5.batch_size": 16})
    assert desc.steps[1].bindings["num_segments"] == 8
    assert desc.steps[5].bindings["batch_size"] == 16


def test_reserved_algorithm_unknown():
    with pytest.raises(UnknownAlgorithm):
        build_standard_pipeline({"algorithm": "i3d"})
    with pytest.raises(UnknownAlgorithm):
        build_standard_pipeline({})


def test_pretrained_needs_path():
    with pytest.raises(MissingPretrainedPath):
        build_standard_pipeline({"algorithm": "toy_mlp", "load_pretrained": True})


def test_unknown_override():
    with pytest.raises(UnknownKey):
        build_standard_pipeline({"algorithm": "toy_mlp", "depth": 3})


class ConstantClassifier(Estimator):
    def fit(self, ctx):
        self.label = self._training_inputs[1].payload.labels()[0]

    def get_state(self):
        return self.label.encode()

    def set_state(self, blob):
        self.label = blob.decode()

    def produce(self, inputs, ctx):
        from vidpipe.values import ClassProbabilities
        n = inputs[0].payload.shape[0]
        return ValueEnvelope(ValueKind.PROBABILITIES, ClassProbabilities(np.ones((n, 1)), (self.label,)))


def test_plugin_can_claim_reserved_name(three_class_table):
    from vidpipe.pipeline import fit_pipeline, produce_pipeline
    from vidpipe.searcher import table_input
    reg = build_registry()
    reg.register(PrimitiveSpec("plugin.i3d", "1.0.0", "estimator", (ValueKind.FEATURE_MATRIX, ValueKind.TABLE),
                               ValueKind.PROBABILITIES, (), requires_fit=True), ConstantClassifier)
    reg.freeze()
    assert find_estimator(reg, "i3d").id == "plugin.i3d"
    desc = build_standard_pipeline({"algorithm": "i3d"}, reg)
    fitted = fit_pipeline(desc, table_input(three_class_table), reg, seed=0)
    out = produce_pipeline(fitted, table_input(three_class_table), reg)
    assert set(out.payload.predicted()) == {three_class_table.labels()[0]}


def test_sampler_uses_training_mode():
    frames = np.arange(32, dtype=np.uint8).reshape(32, 1, 1, 1)
    prim = SegmentSampler({"num_segments": 8})
    env = [ValueEnvelope(ValueKind.RAW_FRAMES, (frames,))]
    eval_out = prim.produce(env, StepContext(1, False, np.random.default_rng(0))).payload
    assert eval_out[0].ravel().tolist() == [1, 5, 9, 13, 17, 21, 25, 29]
    train_out = prim.produce(env, StepContext(1, True, np.random.default_rng(0))).payload
    assert train_out[0].ravel().tolist() != [1, 5, 9, 13, 17, 21, 25, 29]
