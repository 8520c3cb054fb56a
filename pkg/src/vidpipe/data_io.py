"""Raw video container, synthetic action videos, annotation CSVs and splits.

``rawvid`` layout (little-endian)::

    b"RVID" | u8 version=1 | u16 width | u16 height | u8 channels | u32 frame_count
    frame_count * height * width * channels bytes, frame-major, HWC within a frame
"""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .errors import BadMagic, SingleRowClass, TooFewRows, TruncatedPayload, UnsupportedChannels
from .values import Table

RAWVID_MAGIC = b"RVID"
RAWVID_VERSION = 1
_HEADER = struct.Struct("<4sBHHBI")
HEADER_SIZE = _HEADER.size  # 14

PathLike = Union[str, Path]


def encode_rawvid(frames: np.ndarray) -> bytes:
    frames = np.asarray(frames)
    if frames.dtype != np.uint8 or frames.ndim != 4 or frames.shape[0] < 1:
        raise ValueError("rawvid stores T x H x W x C uint8 arrays with T >= 1")
    t, h, w, c = frames.shape
    if c not in (1, 3):
        raise UnsupportedChannels(f"channels must be 1 or 3, got {c}")
    return _HEADER.pack(RAWVID_MAGIC, RAWVID_VERSION, w, h, c, t) + np.ascontiguousarray(frames).tobytes()


def decode_rawvid(data: bytes) -> np.ndarray:
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload("file shorter than the rawvid header")
    magic, version, w, h, c, t = _HEADER.unpack_from(data)
    if magic != RAWVID_MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != RAWVID_VERSION:
        raise BadMagic(f"unsupported rawvid version {version}")
    if c not in (1, 3):
        raise UnsupportedChannels(f"channels must be 1 or 3, got {c}")
    if t < 1:
        raise TruncatedPayload("frame_count must be at least 1")
    expected = t * h * w * c
    payload = len(data) - HEADER_SIZE
    if payload != expected:
        raise TruncatedPayload(f"header promises {expected} payload bytes, found {payload}")
    return np.frombuffer(data, dtype=np.uint8, offset=HEADER_SIZE).reshape(t, h, w, c).copy()


def write_rawvid(path: PathLike, frames: np.ndarray) -> None:
    Path(path).write_bytes(encode_rawvid(frames))


def read_rawvid(path: PathLike) -> np.ndarray:
    return decode_rawvid(Path(path).read_bytes())


# -- annotation tables -------------------------------------------------------

def write_table_csv(table: Table, path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(table.rows)


# -- synthetic videos --------------------------------------------------------

# (name, (dy, dx)); the first four are the base classes
DIRECTIONS: Tuple[Tuple[str, Tuple[int, int]], ...] = (
    ("right", (0, 1)),
    ("left", (0, -1)),
    ("down", (1, 0)),
    ("up", (-1, 0)),
    ("down_right", (1, 1)),
    ("up_left", (-1, -1)),
    ("down_left", (1, -1)),
    ("up_right", (-1, 1)),
)
BACKGROUND_PEAK = 128.0


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 4
    videos_per_class: int = 25
    frames: int = 16
    height: int = 32
    width: int = 32
    channels: int = 3
    noise_std: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.num_classes <= len(DIRECTIONS):
            raise ValueError(f"num_classes must be in [1, {len(DIRECTIONS)}]")
        if min(self.videos_per_class, self.frames, self.height, self.width) < 1:
            raise ValueError("counts and sizes must be >= 1")
        if self.width < 4 or self.width // 4 > self.height:
            raise ValueError("width must be >= 4 and the square (width // 4) must fit the height")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


@dataclass(frozen=True)
class DatasetBundle:
    table_path: Path
    media_dir: Path
    target_index: int = 2


def background(height: int, width: int, channels: int) -> np.ndarray:
    """Dark ramps: red rises left to right, green top to bottom (grayscale mixes both)."""
    xr = np.linspace(0.0, BACKGROUND_PEAK, width)[None, :].repeat(height, 0)
    yr = np.linspace(0.0, BACKGROUND_PEAK, height)[:, None].repeat(width, 1)
    if channels == 1:
        return (0.75 * xr + 0.25 * yr)[..., None]
    return np.stack([xr, yr, np.full_like(xr, BACKGROUND_PEAK / 4)], axis=-1)


def _start(rng: np.random.Generator, length: int, side: int, travel: int, step: int) -> int:
    free = length - side - travel
    if step == 0:
        return int(rng.integers(0, length - side + 1))
    if free < 0:
        return 0 if step > 0 else length - side
    offset = int(rng.integers(0, free + 1))
    return offset if step > 0 else travel + offset


def synthesize_video(spec: SyntheticSpec, label: int, rng: np.random.Generator) -> np.ndarray:
    """A bright square sliding one pixel per frame over a dark ramp background."""
    h, w, c, t = spec.height, spec.width, spec.channels, spec.frames
    side = w // 4
    dy, dx = DIRECTIONS[label][1]
    y0 = _start(rng, h, side, t - 1, dy)
    x0 = _start(rng, w, side, t - 1, dx)
    base = background(h, w, c)
    clip = np.repeat(base[None], t, axis=0)
    for k in range(t):
        y, x = y0 + dy * k, x0 + dx * k
        ya, yb = max(y, 0), min(y + side, h)
        xa, xb = max(x, 0), min(x + side, w)
        if ya < yb and xa < xb:
            clip[k, ya:yb, xa:xb, :] = 255.0
    if spec.noise_std > 0:
        clip = clip + rng.normal(0.0, spec.noise_std, clip.shape)
    return np.clip(np.rint(clip), 0, 255).astype(np.uint8)


def generate_synthetic_dataset(spec: SyntheticSpec, out_dir: PathLike,
                               table_name: str = "annotations.csv") -> DatasetBundle:
    out_dir = Path(out_dir)
    media = out_dir / "media"
    media.mkdir(parents=True, exist_ok=True)
    rows = []
    for c in range(spec.num_classes):
        for v in range(spec.videos_per_class):
            rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(c, v)))
            name = f"c{c}_v{v:03}.rawvid"
            write_rawvid(media / name, synthesize_video(spec, c, rng))
            rows.append((str(len(rows)), name, DIRECTIONS[c][0]))
    table = Table(("d3mIndex", "video", "label"), tuple(rows), 2, media)
    write_table_csv(table, out_dir / table_name)
    return DatasetBundle(out_dir / table_name, media, 2)


# -- splitting ---------------------------------------------------------------

def split_table(table: Table, valid_fraction: float, seed: int) -> Tuple[Table, Table]:
    """Stratified split: ceil(fraction * n_class) rows of every label go to validation."""
    if not 0 < valid_fraction < 1:
        raise ValueError("valid_fraction must lie strictly between 0 and 1")
    if len(table) < 2:
        raise TooFewRows(f"need at least 2 rows to split, got {len(table)}")
    labels = table.labels()
    rng = np.random.default_rng(seed)
    valid: List[int] = []
    for cls in sorted(set(labels)):
        idx = [i for i, lab in enumerate(labels) if lab == cls]
        if len(idx) == 1:
            warnings.warn(f"label {cls!r} has a single row; keeping it in train", SingleRowClass)
            continue
        n_valid = math.ceil(round(valid_fraction * len(idx), 9))
        perm = rng.permutation(len(idx))
        valid.extend(idx[j] for j in perm[:n_valid])
    chosen = set(valid)
    train_idx = [i for i in range(len(table)) if i not in chosen]
    return table.take(train_idx), table.take(sorted(chosen))
