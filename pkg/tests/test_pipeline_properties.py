"""Property tests over randomly generated pipelines built from the zoo registry."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from vidpipe.data_io import SyntheticSpec, generate_synthetic_dataset
from vidpipe.description import PipelineDescription, StepDescription, deserialize_pipeline, serialize_pipeline
from vidpipe.hyperspace import Choice, FreeText, LogUniform, Uniform
from vidpipe.pipeline import bind_config, fit_pipeline, fitted_to_bytes, produce_pipeline, validate_pipeline
from vidpipe.searcher import table_input
from vidpipe.values import ValueKind
from vidpipe.zoo import build_standard_pipeline, default_registry
from vidpipe.zoo.annotations import load_annotations

REGISTRY = default_registry()
SPECS = sorted(REGISTRY, key=lambda s: s.id)


def binding_value(draw, domain):
    if isinstance(domain, Choice):
        return draw(st.sampled_from(domain.options))
    if isinstance(domain, FreeText):
        return draw(st.text(max_size=12))
    if isinstance(domain, LogUniform):
        return draw(st.floats(domain.low, domain.high))
    if isinstance(domain, Uniform):
        return draw(st.floats(domain.low, domain.high))
    return domain.value


@st.composite
def valid_pipelines(draw, max_steps=8):
    num_inputs = draw(st.integers(1, 3))
    producers = {ValueKind.TABLE: [f"inputs.{k}" for k in range(num_inputs)]}
    steps = []
    for i in range(draw(st.integers(1, max_steps))):
        usable = [s for s in SPECS if all(producers.get(k) for k in s.input_kinds)]
        spec = draw(st.sampled_from(usable))
        inputs = tuple(draw(st.sampled_from(producers[k])) for k in spec.input_kinds)
        names = draw(st.lists(st.sampled_from([hp.name for hp in spec.hyperparams]), unique=True)
                     if spec.hyperparams else st.just([]))
        bindings = {n: binding_value(draw, spec.hyperparam(n).domain) for n in names}
        steps.append(StepDescription(spec.key, bindings, inputs))
        producers.setdefault(spec.output_kind, []).append(f"steps.{i}")
    pid = draw(st.text("0123456789abcdef", min_size=32, max_size=32))
    out = draw(st.integers(0, len(steps) - 1))
    return PipelineDescription(pid, num_inputs, tuple(steps), f"steps.{out}")


@settings(max_examples=200, deadline=None)
@given(valid_pipelines())
def test_generated_pipelines_validate(desc):
    assert validate_pipeline(desc, REGISTRY).ok
    for i, step in enumerate(desc.steps):
        for ref in step.inputs:
            if ref.startswith("steps."):
                assert int(ref.split(".")[1]) < i


@settings(max_examples=200, deadline=None)
@given(valid_pipelines())
def test_round_trip_is_byte_identical(desc):
    text = serialize_pipeline(desc)
    back = deserialize_pipeline(text)
    assert back == desc
    assert serialize_pipeline(back) == text


@settings(max_examples=100, deadline=None)
@given(valid_pipelines(), st.data())
def test_forward_reference_rejected(desc, data):
    candidates = [i for i, s in enumerate(desc.steps) if s.inputs]
    if not candidates:
        return
    i = data.draw(st.sampled_from(candidates))
    j = data.draw(st.integers(i, i + 3))
    step = desc.steps[i]
    k = data.draw(st.integers(0, len(step.inputs) - 1))
    inputs = list(step.inputs)
    inputs[k] = f"steps.{j}"
    steps = list(desc.steps)
    steps[i] = StepDescription(step.primitive, step.bindings, tuple(inputs))
    bad = PipelineDescription(desc.pipeline_id, desc.num_inputs, tuple(steps), desc.output)
    assert "ForwardReference" in validate_pipeline(bad, REGISTRY).codes()


@settings(max_examples=100, deadline=None)
@given(valid_pipelines(), st.data())
def test_kind_mismatch_rejected(desc, data):
    pairs = []
    for i, step in enumerate(desc.steps):
        spec = REGISTRY.get(*step.primitive)
        for k, want in enumerate(spec.input_kinds):
            for j in range(i):
                if REGISTRY.get(*desc.steps[j].primitive).output_kind != want:
                    pairs.append((i, k, j))
    if not pairs:
        return
    i, k, j = data.draw(st.sampled_from(pairs))
    step = desc.steps[i]
    inputs = list(step.inputs)
    inputs[k] = f"steps.{j}"
    steps = list(desc.steps)
    steps[i] = StepDescription(step.primitive, step.bindings, tuple(inputs))
    bad = PipelineDescription(desc.pipeline_id, desc.num_inputs, tuple(steps), desc.output)
    assert "KindMismatch" in validate_pipeline(bad, REGISTRY).codes()


OUTSIDE = {
    "num_segments": 12, "height": 15, "width": 0, "mean": 1.5, "std": 0.0, "epochs": 500,
    "learning_rate": 0.5, "milestones": (3, 1), "decay_factor": 0.5, "weight_decay": -1.0,
    "batch_size": 3, "momentum": 1.0, "dropout": 0.95, "hidden_units": 7, "load_pretrained": "yes",
    "pretrained_path": 3, "ext": "avi",
}


@settings(max_examples=100, deadline=None)
@given(valid_pipelines(), st.data())
def test_out_of_domain_binding_rejected(desc, data):
    targets = [(i, hp.name) for i, s in enumerate(desc.steps) for hp in REGISTRY.get(*s.primitive).hyperparams]
    if not targets:
        return
    i, name = data.draw(st.sampled_from(targets))
    step = desc.steps[i]
    steps = list(desc.steps)
    steps[i] = StepDescription(step.primitive, {**step.bindings, name: OUTSIDE[name]}, step.inputs)
    bad = PipelineDescription(desc.pipeline_id, desc.num_inputs, tuple(steps), desc.output)
    assert validate_pipeline(bad, REGISTRY).codes() == ["OutOfDomainBinding"]


@settings(max_examples=100, deadline=None)
@given(valid_pipelines(), st.data())
def test_bind_config_keeps_structure(desc, data):
    targets = [(i, hp) for i, s in enumerate(desc.steps) for hp in REGISTRY.get(*s.primitive).hyperparams]
    if not targets:
        return
    picks = data.draw(st.lists(st.sampled_from(targets), max_size=4))
    config = {f"{i}.{hp.name}": binding_value(data.draw, hp.domain) for i, hp in picks}
    out = bind_config(desc, config, REGISTRY)
    assert len(out.steps) == len(desc.steps)
    assert [s.primitive for s in out.steps] == [s.primitive for s in desc.steps]
    assert [s.inputs for s in out.steps] == [s.inputs for s in desc.steps]
    assert validate_pipeline(out, REGISTRY).ok


@pytest.fixture(scope="module")
def tiny_table(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    spec = SyntheticSpec(num_classes=2, videos_per_class=4, frames=8, height=16, width=16, seed=3)
    b = generate_synthetic_dataset(spec, out)
    return load_annotations(b.table_path, 2, b.media_dir)


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(num_segments=st.sampled_from((8, 16, 32)), batch_size=st.sampled_from((1, 2, 4, 8)),
       hidden=st.sampled_from((8, 16)), epochs=st.integers(1, 4), dropout=st.floats(0, 0.9),
       seed=st.integers(0, 2**64 - 1))
def test_fit_produce_deterministic(tiny_table, num_segments, batch_size, hidden, epochs, dropout, seed):
    desc = build_standard_pipeline({"algorithm": "toy_mlp", "num_segments": num_segments, "batch_size": batch_size,
                                    "hidden_units": hidden, "epochs": epochs, "milestones": (),
                                    "dropout": dropout})
    inputs = table_input(tiny_table)
    a = fit_pipeline(desc, inputs, REGISTRY, seed)
    b = fit_pipeline(desc, inputs, REGISTRY, seed)
    assert a.fingerprint == b.fingerprint
    assert fitted_to_bytes(a) == fitted_to_bytes(b)
    pa = produce_pipeline(a, inputs, REGISTRY).payload.values
    pb = produce_pipeline(b, inputs, REGISTRY).payload.values
    assert pa.tobytes() == pb.tobytes()
    assert np.allclose(pa.sum(axis=1), 1.0, atol=1e-6)
