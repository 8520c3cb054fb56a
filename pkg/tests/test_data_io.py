import hashlib
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from vidpipe.data_io import (
    SyntheticSpec,
    decode_rawvid,
    encode_rawvid,
    generate_synthetic_dataset,
    read_rawvid,
    split_table,
    write_rawvid,
)
from vidpipe.errors import (
    BadMagic,
    BadTargetIndex,
    CorruptVideo,
    RaggedRows,
    SingleRowClass,
    TooFewRows,
    TruncatedPayload,
    UnsupportedChannels,
    UnsupportedExtension,
)
from vidpipe.values import Table
from vidpipe.zoo.annotations import extract_frames, load_annotations, load_video, read_pnm

from reference import clip_features, read_clip, train_accuracy


# -- rawvid -------------------------------------------------------------------

def test_rawvid_size(tmp_path):
    path = tmp_path / "a.rawvid"
    write_rawvid(path, np.zeros((2, 4, 4, 1), dtype=np.uint8))
    data = path.read_bytes()
    assert len(data) == 46
    assert data[:4] == b"RVID" and data[4] == 1
    assert data[5:14] == (4).to_bytes(2, "little") + (4).to_bytes(2, "little") + b"\x01" + (2).to_bytes(4, "little")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 3]), st.integers(0, 2**32))
def test_rawvid_round_trip(t, h, w, c, seed):
    frames = np.random.default_rng(seed).integers(0, 256, (t, h, w, c), dtype=np.uint8)
    data = encode_rawvid(frames)
    back = decode_rawvid(data)
    assert back.dtype == np.uint8 and np.array_equal(back, frames)
    assert encode_rawvid(back) == data


def test_rawvid_file_round_trip(tmp_path):
    frames = np.random.default_rng(0).integers(0, 256, (3, 5, 6, 3), dtype=np.uint8)
    write_rawvid(tmp_path / "v.rawvid", frames)
    assert np.array_equal(read_rawvid(tmp_path / "v.rawvid"), frames)


def _valid_bytes():
    return encode_rawvid(np.zeros((2, 4, 4, 1), dtype=np.uint8))


def test_bad_magic():
    with pytest.raises(BadMagic):
        decode_rawvid(b"XVID" + _valid_bytes()[4:])


@pytest.mark.parametrize("cut", [1, 16, 32])
def test_truncated(cut):
    with pytest.raises(TruncatedPayload):
        decode_rawvid(_valid_bytes()[:-cut])


def test_extra_payload():
    with pytest.raises(TruncatedPayload):
        decode_rawvid(_valid_bytes() + b"\x00")


def test_short_header():
    with pytest.raises(CorruptVideo):
        decode_rawvid(b"RVID\x01")


def test_bad_channels():
    data = bytearray(_valid_bytes())
    data[9] = 2
    with pytest.raises(UnsupportedChannels):
        decode_rawvid(bytes(data))


# -- synthetic data -------------------------------------------------------------

def _tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_synthetic_counts(tmp_path):
    b = generate_synthetic_dataset(SyntheticSpec(num_classes=3, videos_per_class=10), tmp_path)
    lines = b.table_path.read_text().splitlines()
    assert lines[0] == "d3mIndex,video,label" and len(lines) == 31
    assert len(list(b.media_dir.glob("*.rawvid"))) == 30
    assert b.media_dir.joinpath("c2_v009.rawvid").exists()
    assert b"\r" not in b.table_path.read_bytes()
    assert {line.split(",")[2] for line in lines[1:]} == {"right", "left", "down"}


def test_synthetic_deterministic(tmp_path):
    spec = SyntheticSpec(num_classes=2, videos_per_class=3, seed=5)
    generate_synthetic_dataset(spec, tmp_path / "a")
    generate_synthetic_dataset(spec, tmp_path / "b")
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")
    generate_synthetic_dataset(SyntheticSpec(num_classes=2, videos_per_class=3, seed=6), tmp_path / "c")
    assert _tree_digest(tmp_path / "a") != _tree_digest(tmp_path / "c")


def test_square_moves_one_pixel_per_frame(tmp_path):
    b = generate_synthetic_dataset(SyntheticSpec(num_classes=1, videos_per_class=1, noise_std=0, seed=1), tmp_path)
    clip = read_clip(b.media_dir / "c0_v000.rawvid")
    cols = [np.flatnonzero((clip[k, :, :, 2] == 255).any(axis=0)) for k in range(len(clip))]
    assert all(len(c) == 8 for c in cols)
    assert [c[0] - cols[0][0] for c in cols] == list(range(len(clip)))


@pytest.mark.parametrize("noise", [0.0, 8.0])
def test_reference_trainer_separates_classes(tmp_path, noise):
    b = generate_synthetic_dataset(SyntheticSpec(noise_std=noise, seed=7), tmp_path)
    table = load_annotations(b.table_path, 2, b.media_dir)
    x = np.stack([clip_features(read_clip(b.media_dir / v)) for v in table.video_column()])
    classes = sorted(set(table.labels()))
    y = np.array([classes.index(lab) for lab in table.labels()])
    assert train_accuracy(x, y, seed=0) == 1.0


# -- split --------------------------------------------------------------------------

def _table(labels):
    rows = tuple((str(i), f"v{i}.rawvid", lab) for i, lab in enumerate(labels))
    return Table(("d3mIndex", "video", "label"), rows, 2)


def test_split_balanced():
    train, valid = split_table(_table(["a", "b", "c"] * 10), 0.2, 0)
    assert len(train) == 24 and len(valid) == 6
    assert sorted(valid.labels()) == ["a", "a", "b", "b", "c", "c"]


def test_split_two_rows():
    train, valid = split_table(_table(["a", "a"]), 0.5, 0)
    assert len(train) == 1 and len(valid) == 1


def test_split_deterministic():
    t = _table(list("aabbbcccc") * 3)
    assert split_table(t, 0.3, 4) == split_table(t, 0.3, 4)


def test_split_single_row_class_warns():
    with pytest.warns(SingleRowClass):
        train, valid = split_table(_table(["a", "a", "a", "b"]), 0.5, 0)
    assert "b" in train.labels() and "b" not in valid.labels()


def test_split_errors():
    with pytest.raises(TooFewRows):
        split_table(_table(["a"]), 0.5, 0)
    with pytest.raises(ValueError):
        split_table(_table(["a", "a"]), 1.0, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=2, max_size=60), st.floats(0.05, 0.95), st.integers(0, 99))
def test_split_partition_invariants(labels, fraction, seed):
    table = _table(labels)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleRowClass)
        train, valid = split_table(table, fraction, seed)
    assert sorted(train.rows + valid.rows) == sorted(table.rows)
    assert set(train.rows).isdisjoint(valid.rows)
    order = {row: i for i, row in enumerate(table.rows)}
    for part in (train, valid):
        pos = [order[r] for r in part.rows]
        assert pos == sorted(pos)
    for cls in set(labels):
        n = labels.count(cls)
        want = 0 if n == 1 else int(np.ceil(round(fraction * n, 9)))
        assert valid.labels().count(cls) == want


# -- annotations --------------------------------------------------------------------

def test_load_annotations(synth_dir):
    table = load_annotations(synth_dir / "annotations.csv", 2)
    assert len(table) == 100 and table.columns == ("d3mIndex", "video", "label")
    assert table.target_name == "label"
    assert table.rows[0] == ("0", "c0_v000.rawvid", "right")


def test_bad_target_index(synth_dir):
    with pytest.raises(BadTargetIndex):
        load_annotations(synth_dir / "annotations.csv", 5)


def test_ragged_rows(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("d3mIndex,video,label\n0,a.rawvid,left\n1,b.rawvid\n")
    with pytest.raises(RaggedRows):
        load_annotations(path, 2)


def test_missing_csv(tmp_path):
    with pytest.raises(OSError):
        load_annotations(tmp_path / "nope.csv", 2)


# -- frame extraction ----------------------------------------------------------------

def test_extract_five_frames(tmp_path):
    frames = np.random.default_rng(0).integers(0, 256, (5, 6, 7, 3), dtype=np.uint8)
    write_rawvid(tmp_path / "clip.rawvid", frames)
    dirs = extract_frames(tmp_path, "rawvid")
    assert dirs == [tmp_path / "clip"]
    names = sorted(p.name for p in (tmp_path / "clip").iterdir())
    assert names == [f"frame_{i:06d}.ppm" for i in range(1, 6)]
    for i, name in enumerate(names):
        with Image.open(tmp_path / "clip" / name) as img:
            assert np.array_equal(np.asarray(img), frames[i])
    assert np.array_equal(load_video(tmp_path, "clip.rawvid"), frames)


def test_extract_grayscale_pgm(tmp_path):
    frames = np.random.default_rng(1).integers(0, 256, (2, 3, 4, 1), dtype=np.uint8)
    write_rawvid(tmp_path / "g.rawvid", frames)
    extract_frames(tmp_path, "rawvid")
    path = tmp_path / "g" / "frame_000002.pgm"
    assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
    with Image.open(path) as img:
        assert np.array_equal(np.asarray(img), frames[1, :, :, 0])
    assert np.array_equal(read_pnm(path), frames[1])


def test_extract_unsupported(tmp_path):
    with pytest.raises(UnsupportedExtension):
        extract_frames(tmp_path, "avi")


def test_extract_corrupt(tmp_path):
    data = encode_rawvid(np.zeros((10, 4, 4, 1), dtype=np.uint8))
    (tmp_path / "bad.rawvid").write_bytes(data[:-16])  # payload holds 9 frames
    with pytest.raises(CorruptVideo):
        extract_frames(tmp_path, "rawvid")


def test_extract_idempotent(tmp_path):
    write_rawvid(tmp_path / "v.rawvid", np.random.default_rng(2).integers(0, 256, (4, 5, 5, 3), dtype=np.uint8))
    extract_frames(tmp_path, "rawvid")
    first = _tree_digest(tmp_path)
    extract_frames(tmp_path, "rawvid")
    assert _tree_digest(tmp_path) == first
    # a shorter re-encode leaves no stale frames behind
    write_rawvid(tmp_path / "v.rawvid", np.zeros((2, 5, 5, 3), dtype=np.uint8))
    extract_frames(tmp_path, "rawvid")
    assert len(list((tmp_path / "v").iterdir())) == 2
