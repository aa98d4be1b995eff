"""
Knowledge Graph Core
====================

In-memory knowledge graph, dataset ingestion and topology utilities.

Identifiers are interned to dense integer ids at load time (first-seen order,
files read as train, valid, test); every other module works on integer triples
stored as ``(n, 3)`` int64 arrays of ``(head, relation, tail)``.

Usage:
    from tspkit.kg import load_dataset, connected_components, add_inverse_and_selfloop

    split = load_dataset("data/cfamily")
    components = connected_components(split.train)
    augmented = add_inverse_and_selfloop(split.train)
"""

import csv
import re
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse
from scipy.sparse import csgraph

from .errors import AlreadyAugmentedError, TripleParseError, UnknownIdentifierError

Triple = Tuple[int, int, int]
PathLike = Union[str, Path]

INVERSE_MARKER = "^-1"
SELFLOOP_NAME = "__selfloop__"
TRIPLE_COLUMNS = ["head", "relation", "tail"]
DATASET_FILES = ("train.txt", "valid.txt", "test.txt")


def as_triple_array(triples) -> np.ndarray:
    """Coerce an iterable of (h, r, t) into an ``(n, 3)`` int64 array."""
    if isinstance(triples, np.ndarray):
        arr = triples.astype(np.int64, copy=False)
    else:
        arr = np.asarray(list(triples), dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 3), dtype=np.int64)
    return arr.reshape(-1, 3)


def unique_triples(triples: np.ndarray) -> np.ndarray:
    """Drop duplicate rows, keeping first occurrences in their original order."""
    if len(triples) == 0:
        return triples
    _, first = np.unique(triples, axis=0, return_index=True)
    return triples[np.sort(first)]


class KnowledgeGraph:
    """
    Entity/relation vocabularies plus an indexed, duplicate-free triple store.

    The graph is immutable after construction; indices are built lazily and
    are safe for concurrent readers.
    """

    def __init__(self, entities: Sequence[str], relations: Sequence[str], triples=()):
        self.entities: Tuple[str, ...] = tuple(entities)
        self.relations: Tuple[str, ...] = tuple(relations)
        self.entity_ids: Dict[str, int] = {name: i for i, name in enumerate(self.entities)}
        self.relation_ids: Dict[str, int] = {name: i for i, name in enumerate(self.relations)}
        if len(self.entity_ids) != len(self.entities):
            raise ValueError("entity vocabulary contains duplicates")
        if len(self.relation_ids) != len(self.relations):
            raise ValueError("relation vocabulary contains duplicates")

        arr = unique_triples(as_triple_array(triples))
        if len(arr):
            if arr[:, [0, 2]].min() < 0 or arr[:, [0, 2]].max() >= self.n_entities:
                raise UnknownIdentifierError("triple references an entity id outside the vocabulary")
            if arr[:, 1].min() < 0 or arr[:, 1].max() >= self.n_relations:
                raise UnknownIdentifierError("triple references a relation id outside the vocabulary")
        arr.setflags(write=False)
        self.triples: np.ndarray = arr

    def __repr__(self):
        return (
            f"{type(self).__name__}(entities={self.n_entities}, "
            f"relations={self.n_relations}, triples={len(self)})"
        )

    def __len__(self):
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        for h, r, t in self.triples.tolist():
            yield (h, r, t)

    def __contains__(self, triple) -> bool:
        return tuple(int(x) for x in triple) in self.triple_set

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @cached_property
    def triple_set(self) -> FrozenSet[Triple]:
        return frozenset(map(tuple, self.triples.tolist()))

    @cached_property
    def by_head(self) -> Mapping[int, List[Tuple[int, int]]]:
        index = defaultdict(list)
        for h, r, t in self.triples.tolist():
            index[h].append((r, t))
        return dict(index)

    @cached_property
    def by_tail(self) -> Mapping[int, List[Tuple[int, int]]]:
        index = defaultdict(list)
        for h, r, t in self.triples.tolist():
            index[t].append((h, r))
        return dict(index)

    @cached_property
    def by_pair(self) -> Mapping[Tuple[int, int], FrozenSet[int]]:
        index = defaultdict(set)
        for h, r, t in self.triples.tolist():
            index[(h, t)].add(r)
        return {pair: frozenset(rels) for pair, rels in index.items()}

    @cached_property
    def _neighbor_sets(self) -> List[FrozenSet[int]]:
        neighbors = [set() for _ in range(self.n_entities)]
        for h, _, t in self.triples.tolist():
            if h != t:
                neighbors[h].add(t)
                neighbors[t].add(h)
        return [frozenset(n) for n in neighbors]

    def neighbors(self, entity: int) -> FrozenSet[int]:
        """1-hop neighbors of an entity in the undirected view (self excluded)."""
        return self._neighbor_sets[entity]

    @cached_property
    def degrees(self) -> np.ndarray:
        """Undirected degree counting every triple at both endpoints."""
        return np.bincount(self.triples[:, [0, 2]].ravel(), minlength=self.n_entities)

    @property
    def average_degree(self) -> float:
        if self.n_entities == 0:
            return 0.0
        return 2.0 * len(self) / self.n_entities

    @cached_property
    def triple_keys(self) -> np.ndarray:
        """Sorted int64 encodings of all triples (see ``encode``)."""
        return np.sort(self.encode(self.triples))

    def encode(self, triples) -> np.ndarray:
        arr = as_triple_array(triples)
        return (arr[:, 0] * self.n_relations + arr[:, 1]) * self.n_entities + arr[:, 2]

    def contains_many(self, triples) -> np.ndarray:
        """Vectorized membership test returning a boolean mask."""
        keys = self.encode(triples)
        if len(self.triple_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        pos = np.searchsorted(self.triple_keys, keys)
        pos = np.minimum(pos, len(self.triple_keys) - 1)
        return self.triple_keys[pos] == keys

    def undirected_adjacency(self) -> sparse.csr_matrix:
        n = self.n_entities
        heads, tails = self.triples[:, 0], self.triples[:, 2]
        data = np.ones(len(heads), dtype=np.int8)
        adj = sparse.coo_matrix((data, (heads, tails)), shape=(n, n)).tocsr()
        return ((adj + adj.T) > 0).tocsr()

    def with_triples(self, triples) -> "KnowledgeGraph":
        """New graph over the same vocabularies."""
        return KnowledgeGraph(self.entities, self.relations, triples)

    def entity_id(self, name: str) -> int:
        try:
            return self.entity_ids[name]
        except KeyError:
            raise UnknownIdentifierError(f"unknown entity {name!r}") from None

    def relation_id(self, name: str) -> int:
        try:
            return self.relation_ids[name]
        except KeyError:
            raise UnknownIdentifierError(f"unknown relation {name!r}") from None

    def ids_from_names(self, frame: pd.DataFrame) -> np.ndarray:
        """Map a head/relation/tail name frame to an id array."""
        try:
            heads = frame["head"].map(self.entity_ids)
            rels = frame["relation"].map(self.relation_ids)
            tails = frame["tail"].map(self.entity_ids)
        except KeyError as e:
            raise UnknownIdentifierError(f"missing column {e}") from None
        for column, mapped in (("head", heads), ("relation", rels), ("tail", tails)):
            unknown = frame.loc[mapped.isna(), column]
            if len(unknown):
                raise UnknownIdentifierError(f"unknown {column} identifier {unknown.iloc[0]!r}")
        return np.column_stack([heads, rels, tails]).astype(np.int64).reshape(-1, 3)

    def to_frame(self, triples=None) -> pd.DataFrame:
        """Name-level DataFrame with head/relation/tail columns."""
        arr = self.triples if triples is None else as_triple_array(triples)
        ents = np.asarray(self.entities, dtype=object)
        rels = np.asarray(self.relations, dtype=object)
        return pd.DataFrame({
            "head": ents[arr[:, 0]] if len(arr) else [],
            "relation": rels[arr[:, 1]] if len(arr) else [],
            "tail": ents[arr[:, 2]] if len(arr) else [],
        })


class AugmentedKG(KnowledgeGraph):
    """
    Graph extended with one inverse relation per original relation and a
    shared self-loop relation; inverse ids are ``r + n_r``, the self-loop is ``2 n_r``.
    """

    def __init__(self, base: KnowledgeGraph):
        self.base = base
        n_r = base.n_relations
        relations = (
            list(base.relations)
            + [f"{name}{INVERSE_MARKER}" for name in base.relations]
            + [SELFLOOP_NAME]
        )
        heads, rels, tails = base.triples[:, 0], base.triples[:, 1], base.triples[:, 2]
        inverse = np.column_stack([tails, rels + n_r, heads])
        entities = np.arange(base.n_entities, dtype=np.int64)
        loops = np.column_stack([entities, np.full_like(entities, 2 * n_r), entities])
        super().__init__(base.entities, relations, np.concatenate([base.triples, inverse, loops]))

        self.n_base_relations = n_r
        self.selfloop_relation_id = 2 * n_r
        self.inverse_relation_map: Dict[int, int] = {r: r + n_r for r in range(n_r)}

    def inverse(self, relation: int) -> int:
        """Inverse of an original or inverse relation id."""
        n_r = self.n_base_relations
        if relation < n_r:
            return relation + n_r
        if relation < 2 * n_r:
            return relation - n_r
        raise ValueError("the self-loop relation has no inverse")

    def is_inverse(self, relation: int) -> bool:
        return self.n_base_relations <= relation < 2 * self.n_base_relations


def add_inverse_and_selfloop(kg: KnowledgeGraph) -> AugmentedKG:
    """
    Add (t, inv(r), h) for every triple and one self-loop per entity.

    Raises:
        AlreadyAugmentedError: If ``kg`` is already augmented
    """
    if isinstance(kg, AugmentedKG):
        raise AlreadyAugmentedError("graph already carries inverse and self-loop relations")
    return AugmentedKG(kg)


def connected_components(kg: KnowledgeGraph) -> List[FrozenSet[int]]:
    """
    Connected components of the undirected view, ascending by size
    (ties by smallest entity id).
    """
    if kg.n_entities == 0:
        return []
    n_components, labels = csgraph.connected_components(
        kg.undirected_adjacency(), directed=False
    )
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    groups = [frozenset(chunk.tolist()) for chunk in np.split(order, bounds)]
    groups.sort(key=lambda g: (len(g), min(g)))
    return groups


@dataclass(frozen=True)
class DatasetSplit:
    """Training graph plus held-out valid/test triple arrays over shared vocabularies."""
    train: KnowledgeGraph
    valid: np.ndarray
    test: np.ndarray

    @property
    def entities(self) -> Tuple[str, ...]:
        return self.train.entities

    @property
    def relations(self) -> Tuple[str, ...]:
        return self.train.relations

    @cached_property
    def valid_set(self) -> FrozenSet[Triple]:
        return frozenset(map(tuple, self.valid.tolist()))

    @cached_property
    def test_set(self) -> FrozenSet[Triple]:
        return frozenset(map(tuple, self.test.tolist()))

    def training_graph(self, include_valid: bool = False) -> KnowledgeGraph:
        """Graph used for model fitting; valid triples join it only on request."""
        if not include_valid or len(self.valid) == 0:
            return self.train
        return self.train.with_triples(np.concatenate([self.train.triples, self.valid]))

    def all_triples(self) -> np.ndarray:
        return np.concatenate([self.train.triples, self.valid, self.test])


_PANDAS_LINE = re.compile(r"line (\d+)")


def read_triple_frame(path: PathLike) -> pd.DataFrame:
    """
    Read a head<TAB>relation<TAB>tail file into a string DataFrame.

    Blank lines are skipped; the ``line`` column keeps 1-based line numbers.

    Raises:
        TripleParseError: On a line without exactly three fields
    """
    path = Path(path)
    names = TRIPLE_COLUMNS + ["_extra"]
    try:
        frame = pd.read_csv(
            path,
            sep="\t",
            header=None,
            names=names,
            dtype=str,
            quoting=csv.QUOTE_NONE,
            keep_default_na=False,
            na_values=[],
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=TRIPLE_COLUMNS + ["line"])
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        line_number = int(match.group(1)) if match else 0
        raise TripleParseError(path, line_number, _line_at(path, line_number)) from None

    frame["line"] = np.arange(1, len(frame) + 1)
    blank = frame[TRIPLE_COLUMNS].isna().all(axis=1) & frame["_extra"].isna()
    blank |= (frame["head"] == "") & frame[["relation", "tail", "_extra"]].isna().all(axis=1)
    frame = frame.loc[~blank]

    malformed = frame[["relation", "tail"]].isna().any(axis=1) | frame["_extra"].notna()
    if malformed.any():
        line_number = int(frame.loc[malformed, "line"].iloc[0])
        raise TripleParseError(path, line_number, _line_at(path, line_number))
    return frame[TRIPLE_COLUMNS + ["line"]].reset_index(drop=True)


def _line_at(path: Path, line_number: int) -> str:
    with open(path, encoding="utf-8") as handle:
        for i, line in enumerate(handle, start=1):
            if i == line_number:
                return line.rstrip("\n")
    return ""


def load_kg(train_path: PathLike, valid_path: PathLike, test_path: PathLike) -> DatasetSplit:
    """
    Load a dataset from three triple files.

    Vocabularies are the union of all files, ids assigned in first-seen order.
    Duplicates inside a file are dropped with a warning; held-out triples that
    already occur in an earlier file are dropped from the later one.

    Args:
        train_path: Training triples
        valid_path: Validation triples
        test_path: Test triples

    Returns:
        DatasetSplit

    Raises:
        TripleParseError: On a malformed line
    """
    frames = []
    for path in (train_path, valid_path, test_path):
        frame = read_triple_frame(path)
        deduped = frame.drop_duplicates(subset=TRIPLE_COLUMNS)
        if len(deduped) < len(frame):
            logger.warning(f"{path}: dropped {len(frame) - len(deduped)} duplicate triples")
        frames.append(deduped)

    entity_stream = np.concatenate(
        [f[["head", "tail"]].to_numpy(dtype=object).ravel() for f in frames]
    ) if frames else np.empty(0, dtype=object)
    relation_stream = np.concatenate([f["relation"].to_numpy(dtype=object) for f in frames])
    entities = list(pd.unique(entity_stream))
    relations = list(pd.unique(relation_stream))

    vocab = KnowledgeGraph(entities, relations)
    arrays = [vocab.ids_from_names(f) for f in frames]

    train = vocab.with_triples(arrays[0])
    valid = _drop_known(arrays[1], [train.triple_set], valid_path)
    test = _drop_known(arrays[2], [train.triple_set, set(map(tuple, valid.tolist()))], test_path)

    logger.info(
        f"✓ Loaded {len(entities)} entities, {len(relations)} relations, "
        f"{len(train)} train / {len(valid)} valid / {len(test)} test triples"
    )
    return DatasetSplit(train=train, valid=valid, test=test)


def _drop_known(triples: np.ndarray, known: Iterable[set], path) -> np.ndarray:
    known = list(known)
    keep = np.array(
        [not any(t in k for k in known) for t in map(tuple, triples.tolist())], dtype=bool
    )
    if len(keep) and not keep.all():
        logger.warning(f"{path}: dropped {int((~keep).sum())} triples already in an earlier split")
    return triples[keep] if len(keep) else np.empty((0, 3), dtype=np.int64)


def load_dataset(directory: PathLike) -> DatasetSplit:
    """Load ``train.txt``, ``valid.txt`` and ``test.txt`` from a directory."""
    directory = Path(directory)
    return load_kg(*(directory / name for name in DATASET_FILES))


def save_triples(path: PathLike, kg: KnowledgeGraph, triples=None):
    """Write triples as head<TAB>relation<TAB>tail lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kg.to_frame(triples).to_csv(
        path, sep="\t", header=False, index=False,
        quoting=csv.QUOTE_NONE, lineterminator="\n", encoding="utf-8"
    )
    return path


def save_dataset(split: DatasetSplit, directory: PathLike) -> Path:
    """Write a dataset directory (train.txt / valid.txt / test.txt)."""
    directory = Path(directory)
    for name, triples in zip(DATASET_FILES, (split.train.triples, split.valid, split.test)):
        save_triples(directory / name, split.train, triples)
    return directory


def dataset_statistics(split: DatasetSplit) -> Dict[str, int]:
    return {
        "entities": len(split.entities),
        "relations": len(split.relations),
        "train": len(split.train),
        "valid": len(split.valid),
        "test": len(split.test),
    }
