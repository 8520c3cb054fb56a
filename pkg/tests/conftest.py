from __future__ import annotations

from pathlib import Path

import pytest

from vidpipe.data_io import SyntheticSpec, generate_synthetic_dataset, split_table
from vidpipe.zoo import default_registry
from vidpipe.zoo.annotations import load_annotations

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory) -> Path:
    """Default 4-class dataset, seed 7."""
    out = tmp_path_factory.mktemp("synth")
    generate_synthetic_dataset(SyntheticSpec(seed=7), out)
    return out


@pytest.fixture(scope="session")
def synth_table(synth_dir):
    return load_annotations(synth_dir / "annotations.csv", 2, synth_dir / "media")


@pytest.fixture(scope="session")
def synth_split(synth_table):
    return split_table(synth_table, 0.2, 7)


@pytest.fixture(scope="session")
def three_class_table(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth3")
    b = generate_synthetic_dataset(SyntheticSpec(num_classes=3, videos_per_class=10, seed=7), out)
    return load_annotations(b.table_path, 2, b.media_dir)
