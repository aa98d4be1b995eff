"""
Predicted Triple Sets
=====================

Score-ordered prediction container shared by GPHT and both baselines, plus the
prediction file format (head<TAB>relation<TAB>tail<TAB>score, 9 significant digits).

Usage:
    from tspkit.prediction import PredictedTripleSet, write_predictions, read_predictions

    predicted = PredictedTripleSet.from_scored(rows, thresholds={"theta_hrt": 2.0})
    write_predictions("out/predictions_gpht.tsv", predicted, kg)
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

import numpy as np
import pandas as pd

from .kg import KnowledgeGraph, Triple, read_triple_frame

SCORE_FORMAT = "%.9g"


@dataclass(frozen=True)
class PredictedTriple:
    """One prediction with its truth score and optional provenance."""
    head: int
    relation: int
    tail: int
    score: float
    pair_score: Optional[float] = None
    subgraph: Optional[int] = None

    @property
    def triple(self) -> Triple:
        return (self.head, self.relation, self.tail)

    def sort_key(self):
        return (-self.score, self.head, self.relation, self.tail)


@dataclass
class PredictedTripleSet:
    """
    Predictions sorted by score descending, ties broken by (head, relation, tail).

    Attributes:
        entries: Sorted predictions
        thresholds: Thresholds used to produce the set
        staged_counts: Candidate counts per pruning stage
        metadata: Free-form run details (iterations, timings, ...)
    """
    entries: List[PredictedTriple] = field(default_factory=list)
    thresholds: Dict[str, float] = field(default_factory=dict)
    staged_counts: Dict[str, int] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_scored(cls, rows: Iterable, **kwargs) -> "PredictedTripleSet":
        """
        Build a set from PredictedTriple objects or (h, r, t, score) tuples.
        Duplicate triples keep their highest score.
        """
        best: Dict[Triple, PredictedTriple] = {}
        for row in rows:
            entry = row if isinstance(row, PredictedTriple) else PredictedTriple(
                int(row[0]), int(row[1]), int(row[2]), float(row[3])
            )
            current = best.get(entry.triple)
            if current is None or entry.score > current.score:
                best[entry.triple] = entry
        return cls(entries=sorted(best.values(), key=PredictedTriple.sort_key), **kwargs)

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[PredictedTriple]:
        return iter(self.entries)

    def triples(self) -> List[Triple]:
        return [e.triple for e in self.entries]

    def scores(self) -> np.ndarray:
        return np.array([e.score for e in self.entries], dtype=np.float64)

    def as_array(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 3), dtype=np.int64)
        return np.array(self.triples(), dtype=np.int64)

    def to_frame(self, kg: KnowledgeGraph) -> pd.DataFrame:
        frame = kg.to_frame(self.as_array())
        frame["score"] = self.scores()
        return frame


def write_predictions(path: Union[str, Path], predicted: PredictedTripleSet, kg: KnowledgeGraph) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    predicted.to_frame(kg).to_csv(
        path, sep="\t", header=False, index=False, float_format=SCORE_FORMAT,
        quoting=csv.QUOTE_NONE, lineterminator="\n", encoding="utf-8"
    )
    return path


def read_predictions(path: Union[str, Path], kg: KnowledgeGraph) -> PredictedTripleSet:
    """
    Read a prediction file; a plain three-column triple file is accepted with score 1.

    Raises:
        UnknownIdentifierError: On names outside the vocabulary
    """
    path = Path(path)
    frame = pd.read_csv(
        path, sep="\t", header=None, dtype=str, quoting=csv.QUOTE_NONE,
        keep_default_na=False, encoding="utf-8"
    ) if path.stat().st_size else pd.DataFrame()

    if frame.shape[1] == 4:
        frame.columns = ["head", "relation", "tail", "score"]
        scores = frame["score"].astype(float).to_numpy()
    else:
        frame = read_triple_frame(path)
        scores = np.ones(len(frame))

    ids = kg.ids_from_names(frame)
    rows = [(h, r, t, s) for (h, r, t), s in zip(ids.tolist(), scores.tolist())]
    return PredictedTripleSet.from_scored(rows)
