"""One-hidden-layer classifier trained with momentum SGD and a step LR schedule."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import CorruptArtifact, EmptyData, LabelOutOfRange, ShapeMismatch, StaleCache

TRAIN, EVAL = "train", "eval"
PARAMS = ("W1", "b1", "W2", "b2")


@dataclass(frozen=True)
class TrainHyperparams:
    epochs: int = 50
    learning_rate: float = 0.001
    milestones: Tuple[int, ...] = (20, 40)
    decay_factor: float = 10.0
    weight_decay: float = 5e-4
    batch_size: int = 4
    momentum: float = 0.9
    num_segments: int = 16
    dropout: float = 0.5
    hidden_units: int = 32

    def __post_init__(self):
        object.__setattr__(self, "milestones", tuple(int(m) for m in self.milestones))
        ms = self.milestones
        if any(b <= a for a, b in zip(ms, ms[1:])) or any(m >= self.epochs or m < 1 for m in ms):
            raise ValueError(f"milestones {ms} must be strictly increasing, in [1, epochs={self.epochs})")
        if self.epochs < 0 or self.batch_size < 1 or self.hidden_units < 1 or self.num_segments < 1:
            raise ValueError("epochs >= 0, batch_size >= 1, hidden_units >= 1 and num_segments >= 1 required")
        if self.learning_rate <= 0 or self.decay_factor <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate and decay_factor must be positive, weight_decay non-negative")
        if not 0 <= self.momentum < 1 or not 0 <= self.dropout < 1:
            raise ValueError("momentum and dropout must lie in [0, 1)")


@dataclass
class MlpModel:
    W1: np.ndarray  # hidden x in
    b1: np.ndarray
    W2: np.ndarray  # classes x hidden
    b2: np.ndarray

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]

    def params(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMS}

    @classmethod
    def zeros(cls, n_in: int, hidden: int, n_classes: int) -> "MlpModel":
        return cls(np.zeros((hidden, n_in)), np.zeros(hidden), np.zeros((n_classes, hidden)), np.zeros(n_classes))

    @classmethod
    def init(cls, n_in: int, hidden: int, n_classes: int, rng: np.random.Generator) -> "MlpModel":
        a1, a2 = math.sqrt(6.0 / n_in), math.sqrt(6.0 / hidden)
        return cls(rng.uniform(-a1, a1, (hidden, n_in)), np.zeros(hidden),
                   rng.uniform(-a2, a2, (n_classes, hidden)), np.zeros(n_classes))


def lr_at_epoch(base_lr: float, milestones: Sequence[int], decay_factor: float, epoch: int) -> float:
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    passed = sum(1 for m in milestones if m <= epoch)
    return base_lr / decay_factor**passed


def sgd_step(w: np.ndarray, g: np.ndarray, v: np.ndarray, lr: float, momentum: float,
             weight_decay: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coupled weight decay, heavy-ball momentum: v = mu*v + g + wd*w; w = w - lr*v."""
    if not (w.shape == g.shape == v.shape):
        raise ShapeMismatch(f"shapes differ: w{w.shape} g{g.shape} v{v.shape}")
    v = momentum * v + g + weight_decay * w
    return w - lr * v, v


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    x: np.ndarray
    y: np.ndarray
    pre: np.ndarray
    mask: np.ndarray  # dropout multiplier per hidden unit (0 or 1/(1-p)), ones in eval
    h: np.ndarray
    probs: np.ndarray
    params: Tuple[np.ndarray, ...] = field(repr=False)


def _check_input(model: MlpModel, x: np.ndarray) -> None:
    if x.ndim != 2 or x.shape[1] != model.W1.shape[1]:
        raise ShapeMismatch(f"features of shape {x.shape} do not fit input size {model.W1.shape[1]}")


def forward_loss(model: MlpModel, x: np.ndarray, y: np.ndarray, dropout: float, mode: str,
                 rng: Optional[np.random.Generator] = None):
    """Mean softmax cross-entropy. Returns ``(loss, probabilities, cache)``."""
    _check_input(model, x)
    y = np.asarray(y, dtype=np.intp)
    if y.shape != (x.shape[0],):
        raise ShapeMismatch("one label per row required")
    pre = x @ model.W1.T + model.b1
    act = np.maximum(pre, 0.0)
    if mode == TRAIN and dropout > 0:
        keep = rng.random(act.shape) >= dropout
        mask = keep / (1.0 - dropout)
    else:
        mask = np.ones_like(act)
    h = act * mask
    probs = softmax(h @ model.W2.T + model.b2)
    picked = probs[np.arange(len(y)), y]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    cache = ForwardCache(x, y, pre, mask, h, probs, tuple(model.params().values()))
    return loss, probs, cache


def backward(model: MlpModel, cache: ForwardCache) -> Dict[str, np.ndarray]:
    if any(a is not b for a, b in zip(cache.params, model.params().values())):
        raise StaleCache("model parameters changed since the forward pass")
    n = cache.x.shape[0]
    dlogits = cache.probs.copy()
    dlogits[np.arange(n), cache.y] -= 1.0
    dlogits /= n
    dh = dlogits @ model.W2 * cache.mask * (cache.pre > 0)
    return {
        "W1": dh.T @ cache.x,
        "b1": dh.sum(axis=0),
        "W2": dlogits.T @ cache.h,
        "b2": dlogits.sum(axis=0),
    }


def predict_proba(model: MlpModel, x: np.ndarray) -> np.ndarray:
    _check_input(model, x)
    h = np.maximum(x @ model.W1.T + model.b1, 0.0)
    return softmax(h @ model.W2.T + model.b2)


def fit_classifier(features: np.ndarray, labels: np.ndarray, hp: TrainHyperparams, seed: int,
                   n_classes: Optional[int] = None,
                   init: Optional[MlpModel] = None) -> Tuple[MlpModel, List[float]]:
    """Train from scratch (or from ``init``); returns the model and mean loss per epoch."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyData("need at least one training sample")
    if y.shape != (x.shape[0],):
        raise ShapeMismatch("one label per row required")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    if y.min() < 0 or y.max() >= n_classes:
        raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    y = y.astype(np.intp)
    init_ss, shuffle_ss, drop_ss = np.random.SeedSequence(seed).spawn(3)
    if init is None:
        model = MlpModel.init(x.shape[1], hp.hidden_units, n_classes, np.random.default_rng(init_ss))
    else:
        if init.sizes != (x.shape[1], hp.hidden_units, n_classes):
            raise ShapeMismatch(f"initial weights have sizes {init.sizes}, "
                                f"need {(x.shape[1], hp.hidden_units, n_classes)}")
        model = MlpModel(*(p.copy() for p in init.params().values()))
    shuffle_rng = np.random.default_rng(shuffle_ss)
    drop_rng = np.random.default_rng(drop_ss)
    velocity = {k: np.zeros_like(v) for k, v in model.params().items()}
    history: List[float] = []
    n = x.shape[0]
    for epoch in range(hp.epochs):
        lr = lr_at_epoch(hp.learning_rate, hp.milestones, hp.decay_factor, epoch)
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            loss, _, cache = forward_loss(model, x[idx], y[idx], hp.dropout, TRAIN, drop_rng)
            grads = backward(model, cache)
            new = {}
            for k in PARAMS:
                new[k], velocity[k] = sgd_step(getattr(model, k), grads[k], velocity[k],
                                               lr, hp.momentum, hp.weight_decay)
            model = MlpModel(**new)
            total += loss * len(idx)
        history.append(total / n)
    return model, history


# -- state blobs -------------------------------------------------------------
# "MLP1" | u32 header length | JSON header | W1 b1 W2 b2 [mean scale] as little-endian float64

_STATE_MAGIC = b"MLP1"
_WEIGHTS_MAGIC = b"PWT1"


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature z-scoring fitted on training features."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "FeatureScaler":
        scale = x.std(axis=0)
        scale[scale < 1e-12] = 1.0
        return cls(x.mean(axis=0), scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.mean.size:
            raise ShapeMismatch(f"features of shape {x.shape} do not fit scaler of size {self.mean.size}")
        return (x - self.mean) / self.scale


def model_to_bytes(model: MlpModel, classes: Sequence[str], scaler: Optional[FeatureScaler] = None) -> bytes:
    header = json.dumps({"classes": list(classes), "sizes": list(model.sizes), "scaled": scaler is not None},
                        separators=(",", ":")).encode("utf-8")
    arrays = list(model.params().values())
    if scaler is not None:
        arrays += [scaler.mean, scaler.scale]
    parts = [_STATE_MAGIC, struct.pack("<I", len(header)), header]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays]
    return b"".join(parts)


def model_from_bytes(blob: bytes) -> Tuple[MlpModel, Tuple[str, ...], Optional[FeatureScaler]]:
    if blob[:4] != _STATE_MAGIC:
        raise CorruptArtifact("not a classifier state blob")
    try:
        (n,) = struct.unpack_from("<I", blob, 4)
        header = json.loads(blob[8:8 + n].decode("utf-8"))
        n_in, hidden, k = header["sizes"]
        shapes = [(hidden, n_in), (hidden,), (k, hidden), (k,)]
        if header["scaled"]:
            shapes += [(n_in,), (n_in,)]
        pos, arrays = 8 + n, []
        for shape in shapes:
            size = int(np.prod(shape)) * 8
            if pos + size > len(blob):
                raise ValueError("weights truncated")
            arrays.append(np.frombuffer(blob, dtype="<f8", count=size // 8, offset=pos).reshape(shape).copy())
            pos += size
        if pos != len(blob):
            raise ValueError("trailing bytes in state blob")
    except (struct.error, ValueError, KeyError, TypeError) as exc:
        raise CorruptArtifact(f"malformed classifier state: {exc}") from None
    scaler = FeatureScaler(*arrays[4:]) if header["scaled"] else None
    return MlpModel(*arrays[:4]), tuple(header["classes"]), scaler


def save_pretrained(model: MlpModel, classes: Sequence[str], path: Union[str, Path]) -> None:
    """Write initial weights in a checksummed container (magic, length, blob, sha256)."""
    blob = model_to_bytes(model, classes)
    body = _WEIGHTS_MAGIC + struct.pack("<I", len(blob)) + blob
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_pretrained(path: Union[str, Path]) -> Tuple[MlpModel, Tuple[str, ...]]:
    data = Path(path).read_bytes()
    if data[:4] != _WEIGHTS_MAGIC or len(data) < 40:
        raise CorruptArtifact(f"{path} is not a pretrained-weights file")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptArtifact(f"{path}: checksum mismatch")
    (n,) = struct.unpack_from("<I", body, 4)
    if 8 + n != len(body):
        raise CorruptArtifact(f"{path}: length mismatch")
    model, classes, _ = model_from_bytes(body[8:])
    return model, classes
