"""Frame-level preprocessing: temporal segment sampling, resizing, normalisation, features."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import ShapeMismatch, ZeroStd

TRAIN_RANDOM = "train_random"
EVAL_CENTER = "eval_center"


def segment_indices(num_frames: int, num_segments: int, mode: str = EVAL_CENTER,
                    rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """One frame index per equal-width temporal segment.

    With fewer frames than segments every segment maps to
    ``min(floor(k*T/N), T-1)`` in both modes, so short clips repeat frames.
    ``eval_center`` never touches ``rng``.
    """
    T, N = int(num_frames), int(num_segments)
    if T < 1 or N < 1:
        raise ValueError("need at least one frame and one segment")
    k = np.arange(N)
    starts = (k * T) // N
    if T < N:
        return np.minimum(starts, T - 1)
    ends = ((k + 1) * T) // N
    if mode == EVAL_CENTER:
        return (starts + ends - 1) // 2
    if mode == TRAIN_RANDOM:
        if rng is None:
            raise ValueError("train_random sampling needs an rng")
        return starts + rng.integers(0, ends - starts)
    raise ValueError(f"unknown segment mode {mode!r}")


def segment_sample(frames: np.ndarray, num_segments: int, mode: str = EVAL_CENTER,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return frames[segment_indices(frames.shape[0], num_segments, mode, rng)]


def _axis_weights(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def scale_frames(frames: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a T x H x W x C uint8 clip (half-pixel centres, edge clamp)."""
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")
    _, h, w, _ = frames.shape
    if (h, w) == (out_h, out_w):
        return frames.copy()
    y0, y1, wy = _axis_weights(h, out_h)
    x0, x1, wx = _axis_weights(w, out_w)
    f = frames.astype(np.float64)
    wy = wy[None, :, None, None]
    wx = wx[None, None, :, None]
    top = f[:, y0][:, :, x0] * (1 - wx) + f[:, y0][:, :, x1] * wx
    bot = f[:, y1][:, :, x0] * (1 - wx) + f[:, y1][:, :, x1] * wx
    out = top * (1 - wy) + bot * wy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def normalize_frames(frames: np.ndarray, mean: Sequence[float], std: Sequence[float]) -> np.ndarray:
    c = frames.shape[-1]
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (c,))
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), (c,))
    if np.any(std <= 0):
        raise ZeroStd("per-channel std must be positive")
    return (frames.astype(np.float64) / 255.0 - mean) / std


def motion_features(frames: np.ndarray) -> np.ndarray:
    """Temporal mean-absolute differences, then per-frame channel means.

    For N frames and C channels the result has ``(2N - 1) * C`` entries:
    ``(N-1)*C`` pair-major difference terms followed by ``N*C`` frame means.
    """
    if frames.ndim != 4:
        raise ShapeMismatch(f"expected T x H x W x C, got shape {frames.shape}")
    diffs = np.abs(np.diff(frames, axis=0)).mean(axis=(1, 2))
    means = frames.mean(axis=(1, 2))
    return np.concatenate([diffs.ravel(), means.ravel()])
