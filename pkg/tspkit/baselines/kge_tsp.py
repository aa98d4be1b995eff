"""
KGE-TSP
=======

Exhaustive scoring of every candidate (h, r, t) with a trained embedding model.
The candidate space is streamed twice by head-entity chunks: the first pass
accumulates the softmax normalizer as a running (max, rescaled sum) pair, the
second keeps non-training candidates whose softmax score exceeds theta_kge / |C|.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np
import torch
from loguru import logger

from ..kg import KnowledgeGraph
from ..kge import KgeModel
from ..prediction import PredictedTripleSet

SCORE_BUDGET = 4_000_000


@dataclass
class StreamingLogSumExp:
    """log Σ exp(x) over streamed blocks, stabilized by the running maximum."""
    maximum: float = -math.inf
    total: float = 0.0
    count: int = 0

    def update(self, block: np.ndarray) -> "StreamingLogSumExp":
        block = np.asarray(block, dtype=np.float64).ravel()
        if block.size == 0:
            return self
        new_max = max(self.maximum, float(block.max()))
        rescale = math.exp(self.maximum - new_max) if self.count else 0.0
        self.total = self.total * rescale + float(np.exp(block - new_max).sum())
        self.maximum = new_max
        self.count += block.size
        return self

    def merge(self, other: "StreamingLogSumExp") -> "StreamingLogSumExp":
        if other.count == 0:
            return self
        if self.count == 0:
            return StreamingLogSumExp(other.maximum, other.total, other.count)
        new_max = max(self.maximum, other.maximum)
        total = (
            self.total * math.exp(self.maximum - new_max)
            + other.total * math.exp(other.maximum - new_max)
        )
        return StreamingLogSumExp(new_max, total, self.count + other.count)

    @property
    def value(self) -> float:
        if self.count == 0:
            return -math.inf
        return self.maximum + math.log(self.total)


def head_chunks(kge: KgeModel) -> Iterator[np.ndarray]:
    per_head = max(1, kge.n_relations * kge.n_entities * kge.dim)
    size = max(1, SCORE_BUDGET // per_head)
    heads = np.arange(kge.n_entities)
    for start in range(0, len(heads), size):
        yield heads[start:start + size]


@torch.no_grad()
def candidate_scores(kge: KgeModel, heads: np.ndarray) -> np.ndarray:
    """Scores of all (h, r, t) for the given heads, shape (len(heads), n_r, n_e)."""
    h = torch.as_tensor(heads, dtype=torch.long)[:, None, None]
    r = torch.arange(kge.n_relations)[None, :, None]
    t = torch.arange(kge.n_entities)[None, None, :]
    return kge.score(h, r, t).cpu().numpy()


def log_normalizer(kge: KgeModel, threads: int = 1) -> StreamingLogSumExp:
    """First pass: log of the softmax denominator over the whole candidate space."""
    def partial(heads):
        return StreamingLogSumExp().update(candidate_scores(kge, heads))

    chunks = list(head_chunks(kge))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(partial, chunks))
    else:
        partials = [partial(c) for c in chunks]

    merged = StreamingLogSumExp()
    for part in partials:
        merged = merged.merge(part)
    return merged


def _emit(kge: KgeModel, kg: KnowledgeGraph, heads: np.ndarray, log_z: float, threshold: float) -> List[Tuple[int, int, int, float]]:
    softmax = np.exp(candidate_scores(kge, heads) - log_z)
    hi, ri, ti = np.nonzero(softmax > threshold)
    if len(hi) == 0:
        return []
    triples = np.column_stack([heads[hi], ri, ti]).astype(np.int64)
    keep = ~kg.contains_many(triples)
    return [
        (int(h), int(r), int(t), float(s))
        for (h, r, t), s in zip(triples[keep].tolist(), softmax[hi, ri, ti][keep].tolist())
    ]


def kge_tsp_predict(kg: KnowledgeGraph, kge: KgeModel, theta_kge: float, threads: int = 1) -> PredictedTripleSet:
    """
    Args:
        kg: Training graph; its triples are never emitted
        kge: Trained embedding model over the same vocabularies
        theta_kge: Threshold, divided by the candidate-space size
        threads: Worker threads over head chunks

    Returns:
        Predictions with softmax scores
    """
    if theta_kge <= 0:
        raise ValueError("theta_kge must be positive")
    kge.eval()
    space = kge.n_entities * kge.n_relations * kge.n_entities
    normalizer = log_normalizer(kge, threads)
    threshold = theta_kge / space
    logger.debug(f"KGE-TSP normalizer log Z = {normalizer.value:.6f} over {space} candidates")

    chunks = list(head_chunks(kge))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _emit(kge, kg, c, normalizer.value, threshold), chunks))
    else:
        parts = [_emit(kge, kg, c, normalizer.value, threshold) for c in chunks]

    predicted = PredictedTripleSet.from_scored(
        (row for part in parts for row in part),
        thresholds={"theta_kge": theta_kge},
        staged_counts={"full": space, "final": 0},
        metadata={"log_normalizer": normalizer.value},
    )
    predicted.staged_counts["final"] = len(predicted)
    logger.info(f"✓ KGE-TSP predicted {len(predicted)} triples out of {space} candidates")
    return predicted
