"""Central finite-difference oracle for the classifier's backward pass."""

from __future__ import annotations

import numpy as np

from vidpipe.zoo.mlp import PARAMS, MlpModel, backward, forward_loss

H = 1e-5
KINK_MARGIN = 1e-3


def random_instance(rng: np.random.Generator, batch: int = 6):
    n_in, hidden, k = (int(v) for v in rng.integers((2, 2, 2), (10, 12, 6)))
    model = MlpModel(rng.normal(size=(hidden, n_in)), rng.normal(size=hidden) * 0.5,
                     rng.normal(size=(k, hidden)), rng.normal(size=k) * 0.5)
    x = rng.normal(size=(batch, n_in))
    y = rng.integers(0, k, size=batch)
    p = float(rng.choice([0.0, 0.3, 0.5]))
    return model, x, y, p


def near_kink(model: MlpModel, x: np.ndarray) -> bool:
    """True when a perturbation of size H could flip a ReLU, which breaks finite differences."""
    pre = x @ model.W1.T + model.b1
    return bool(np.any(np.abs(pre) < KINK_MARGIN))


def relative_errors(model, x, y, p, mask_seed=0):
    """Per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-12)."""
    def loss_of(m):
        return forward_loss(m, x, y, p, "train", np.random.default_rng(mask_seed))[0]

    _, _, cache = forward_loss(model, x, y, p, "train", np.random.default_rng(mask_seed))
    grads = backward(model, cache)
    errors = {}
    for name in PARAMS:
        base = getattr(model, name)
        num = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[idx] += H
            minus[idx] -= H
            lp = loss_of(MlpModel(**{**model.params(), name: plus}))
            lm = loss_of(MlpModel(**{**model.params(), name: minus}))
            num[idx] = (lp - lm) / (2 * H)
        denom = max(np.linalg.norm(grads[name]), np.linalg.norm(num), 1e-12)
        errors[name] = float(np.linalg.norm(grads[name] - num) / denom)
    return errors


def kink_free_instances(seed: int, count: int):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        inst = random_instance(rng)
        if not near_kink(inst[0], inst[1]):
            out.append(inst)
    return out
