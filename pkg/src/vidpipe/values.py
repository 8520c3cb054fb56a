"""Typed values passed between pipeline steps."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from .errors import ShapeMismatch


class ValueKind(str, Enum):
    TABLE = "Table"
    PATH_LIST = "PathList"
    RAW_FRAMES = "RawFrames"
    TENSOR_FRAMES = "TensorFrames"
    FEATURE_MATRIX = "FeatureMatrix"
    LABEL_VECTOR = "LabelVector"
    PROBABILITIES = "Probabilities"


@dataclass(frozen=True)
class Table:
    """Annotation table: string cells, one marked label column, optional media root."""

    columns: Tuple[str, ...]
    rows: Tuple[Tuple[str, ...], ...]
    target_index: Optional[int] = None
    media_dir: Optional[Path] = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def target_name(self) -> Optional[str]:
        return None if self.target_index is None else self.columns[self.target_index]

    def column(self, name: str) -> Tuple[str, ...]:
        j = self.columns.index(name)
        return tuple(r[j] for r in self.rows)

    def labels(self) -> Tuple[str, ...]:
        if self.target_index is None:
            raise KeyError("table has no label column")
        return tuple(r[self.target_index] for r in self.rows)

    def index_column(self) -> Tuple[str, ...]:
        if "d3mIndex" in self.columns:
            return self.column("d3mIndex")
        return tuple(str(i) for i in range(len(self.rows)))

    def video_column(self) -> Tuple[str, ...]:
        if "video" in self.columns:
            return self.column("video")
        skip = {self.target_index, self.columns.index("d3mIndex") if "d3mIndex" in self.columns else None}
        for j, _ in enumerate(self.columns):
            if j not in skip:
                return tuple(r[j] for r in self.rows)
        raise KeyError("table has no video column")

    def take(self, indices: Sequence[int]) -> "Table":
        return Table(self.columns, tuple(self.rows[i] for i in indices), self.target_index, self.media_dir)

    def with_media(self, media_dir) -> "Table":
        return Table(self.columns, self.rows, self.target_index, Path(media_dir))


@dataclass(frozen=True)
class ClassProbabilities:
    values: np.ndarray
    classes: Tuple[str, ...]

    def __len__(self) -> int:
        return self.values.shape[0]

    def predicted(self) -> Tuple[str, ...]:
        return tuple(self.classes[i] for i in np.argmax(self.values, axis=1))


def _check_frames(payload: Any, dtype_check) -> None:
    if not isinstance(payload, (list, tuple)):
        raise ShapeMismatch("frame payload must be a list of T x H x W x C arrays")
    for a in payload:
        if not isinstance(a, np.ndarray) or a.ndim != 4 or a.shape[0] < 1 or a.shape[3] not in (1, 3):
            raise ShapeMismatch(f"bad frame array shape {getattr(a, 'shape', None)}")
        dtype_check(a)


def _u8(a):
    if a.dtype != np.uint8:
        raise ShapeMismatch(f"RawFrames must be uint8, got {a.dtype}")


def _finite(a):
    if not np.issubdtype(a.dtype, np.floating) or not np.all(np.isfinite(a)):
        raise ShapeMismatch("TensorFrames must be finite floats")


def check_payload(kind: ValueKind, payload: Any) -> None:
    if kind is ValueKind.TABLE:
        ok = isinstance(payload, Table)
    elif kind is ValueKind.PATH_LIST:
        ok = isinstance(payload, (list, tuple)) and all(isinstance(p, (str, Path)) for p in payload)
    elif kind is ValueKind.RAW_FRAMES:
        _check_frames(payload, _u8)
        ok = True
    elif kind is ValueKind.TENSOR_FRAMES:
        _check_frames(payload, _finite)
        ok = True
    elif kind is ValueKind.FEATURE_MATRIX:
        ok = isinstance(payload, np.ndarray) and payload.ndim == 2 and bool(np.all(np.isfinite(payload)))
    elif kind is ValueKind.LABEL_VECTOR:
        ok = isinstance(payload, np.ndarray) and payload.ndim == 1
    elif kind is ValueKind.PROBABILITIES:
        ok = (isinstance(payload, ClassProbabilities) and payload.values.ndim == 2
              and payload.values.shape[1] == len(payload.classes)
              and bool(np.all(np.abs(payload.values.sum(axis=1) - 1.0) <= 1e-6)))
    else:  # pragma: no cover
        ok = False
    if not ok:
        raise ShapeMismatch(f"payload of type {type(payload).__name__} is not a valid {kind.value}")


@dataclass(frozen=True)
class ValueEnvelope:
    kind: ValueKind
    payload: Any = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ValueKind(self.kind))
        check_payload(self.kind, self.payload)
