"""
Describing pipelines
====================

Build the standard six-step pipeline, inspect it, apply a configuration
and watch the validator catch a broken edit.
"""

from vidpipe import (
    PipelineDescription,
    StepDescription,
    bind_config,
    build_standard_pipeline,
    default_registry,
    deserialize_pipeline,
    serialize_pipeline,
    validate_pipeline,
)
from vidpipe.zoo import STANDARD_ALIASES

registry = default_registry()

# the builder wires reader -> sampler -> scaler -> normaliser -> features -> classifier
pipeline = build_standard_pipeline({"algorithm": "toy_mlp", "load_pretrained": False})
for i, step in enumerate(pipeline.steps):
    print(i, step.primitive[0], dict(step.bindings), step.inputs)

# descriptions serialise to canonical JSON and come back unchanged
text = serialize_pipeline(pipeline)
print(len(text), "bytes of JSON;", "round-trip identical:", serialize_pipeline(deserialize_pipeline(text)) == text)

# a sampled configuration is applied by key; short aliases map onto step indices
tuned = bind_config(pipeline, {"learning_rate": 3e-4, "num_segments": 32}, registry, STANDARD_ALIASES)
print("step 5 bindings:", dict(tuned.steps[5].bindings))
print("step 1 bindings:", dict(tuned.steps[1].bindings))

# point the sampler at a later step: the graph would no longer be acyclic
steps = list(pipeline.steps)
steps[1] = StepDescription(steps[1].primitive, {}, ("steps.3",))
broken = PipelineDescription(pipeline.pipeline_id, 1, tuple(steps), pipeline.output)
for issue in validate_pipeline(broken, registry).issues:
    print(issue.code, "at step", issue.step_index, "-", issue.message)
