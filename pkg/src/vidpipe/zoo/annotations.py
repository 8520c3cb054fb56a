"""Annotation loading and frame extraction to PGM/PPM directories."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..data_io import read_rawvid
from ..errors import BadTargetIndex, CorruptVideo, RaggedRows, UnsupportedExtension
from ..values import Table

SUPPORTED_EXTENSIONS = ("rawvid",)
FRAME_PATTERN = "frame_{:06d}"

PathLike = Union[str, Path]


def load_annotations(csv_path: PathLike, target_index: int, media_dir: Optional[PathLike] = None) -> Table:
    with Path(csv_path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RaggedRows(f"{csv_path}: missing header row")
    header, body = tuple(rows[0]), rows[1:]
    if not 0 <= target_index < len(header):
        raise BadTargetIndex(f"target_index {target_index} out of range for {len(header)} columns")
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRows(f"{csv_path}:{n}: expected {len(header)} fields, got {len(row)}")
    return Table(header, tuple(tuple(r) for r in body), target_index,
                 Path(media_dir) if media_dir is not None else None)


def write_pnm(path: PathLike, frame: np.ndarray) -> None:
    h, w, c = frame.shape
    magic = b"P5" if c == 1 else b"P6"
    Path(path).write_bytes(magic + b"\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(frame).tobytes())


def read_pnm(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptVideo(f"{path}: truncated PNM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6") or maxval != 255:
        raise CorruptVideo(f"{path}: only 8-bit binary PGM/PPM frames are supported")
    c = 1 if magic == b"P5" else 3
    raster = data[pos:]
    if len(raster) != h * w * c:
        raise CorruptVideo(f"{path}: raster has {len(raster)} bytes, expected {h * w * c}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, c).copy()


def frame_files(frame_dir: PathLike) -> List[Path]:
    return sorted(p for p in Path(frame_dir).glob("frame_*") if p.suffix in (".pgm", ".ppm"))


def read_frame_dir(frame_dir: PathLike) -> np.ndarray:
    files = frame_files(frame_dir)
    if not files:
        raise CorruptVideo(f"{frame_dir}: no frames")
    return np.stack([read_pnm(p) for p in files])


def extract_frames(media_dir: PathLike, ext: str) -> List[Path]:
    """Explode every ``<stem>.<ext>`` into ``<media_dir>/<stem>/frame_000001.p?m ...``."""
    ext = ext.lstrip(".")
    if ext not in SUPPORTED_EXTENSIONS:
        raise UnsupportedExtension(f"unsupported video container {ext!r}; supported: {SUPPORTED_EXTENSIONS}")
    media_dir = Path(media_dir)
    if not media_dir.is_dir():
        raise FileNotFoundError(f"media directory {media_dir} does not exist")
    created = []
    for video in sorted(media_dir.glob(f"*.{ext}")):
        frames = read_rawvid(video)
        out = media_dir / video.stem
        out.mkdir(exist_ok=True)
        for stale in frame_files(out):
            stale.unlink()
        suffix = ".pgm" if frames.shape[3] == 1 else ".ppm"
        for i, frame in enumerate(frames, start=1):
            write_pnm(out / (FRAME_PATTERN.format(i) + suffix), frame)
        created.append(out)
    return created


def load_video(media_dir: PathLike, name: str) -> np.ndarray:
    """Frames of one table entry: the extracted directory if present, else the container."""
    media_dir = Path(media_dir)
    frame_dir = media_dir / Path(name).stem
    if frame_dir.is_dir() and frame_files(frame_dir):
        return read_frame_dir(frame_dir)
    return read_rawvid(media_dir / name)
