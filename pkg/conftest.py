"""Shared fixtures: loguru capture, toy graphs and a tiny generated family dataset."""

from pathlib import Path

import numpy as np
import pytest
from loguru import logger

from tspkit.config import SplitRatios
from tspkit.datagen import generate_family_kg, split_dataset, write_dataset
from tspkit.kg import DatasetSplit, KnowledgeGraph


@pytest.fixture
def caplog(caplog):
    """Route loguru records into pytest's caplog."""
    handler_id = logger.add(caplog.handler, format="{message}", level=0)
    yield caplog
    logger.remove(handler_id)


def write_lines(path: Path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def toy_kg() -> KnowledgeGraph:
    """Six entities, two relations: a chain a-b-c-d plus an isolated pair e-f."""
    entities = ["a", "b", "c", "d", "e", "f"]
    relations = ["knows", "likes"]
    triples = [(0, 0, 1), (1, 0, 2), (2, 1, 3), (0, 1, 2), (4, 0, 5)]
    return KnowledgeGraph(entities, relations, triples)


@pytest.fixture
def toy_split(toy_kg) -> DatasetSplit:
    valid = np.array([(1, 1, 3)], dtype=np.int64)
    test = np.array([(0, 0, 2), (3, 0, 0), (5, 1, 4)], dtype=np.int64)
    return DatasetSplit(train=toy_kg, valid=valid, test=test)


@pytest.fixture(scope="session")
def family_kg() -> KnowledgeGraph:
    return generate_family_kg(60, 2, np.random.default_rng(11))


@pytest.fixture(scope="session")
def family_split(family_kg) -> DatasetSplit:
    return split_dataset(family_kg, SplitRatios(train=0.72, valid=0.08, test=0.20), np.random.default_rng(12))


@pytest.fixture
def family_dir(tmp_path, family_split) -> Path:
    return write_dataset(family_split, tmp_path / "dataset")
