"""
GPHT Prediction
===============

Partition -> head-tail pair prediction -> relation scoring.

Every unconnected pair inside a subgraph is scored by the head-tail model; pairs
above ``theta_ht`` (deduplicated across overlapping subgraphs, keeping the highest
pair score) get every relation scored by the embedding model. Relation scores are
normalized by a softmax over the pair's candidates and kept above ``theta_hrt / |C|``.

Usage:
    from tspkit.pipeline import gpht_predict

    predicted = gpht_predict(split.train, partition, htem_model, kge_model, theta_ht=0.3, theta_hrt=2.0)
    print(predicted.staged_counts)
"""

import time
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import torch
from loguru import logger
from tqdm import tqdm

from .htem import HtemModel, predict_pairs
from .kg import KnowledgeGraph, Triple
from .kge import KgeModel
from .partition import PartitionResult
from .prediction import PredictedTriple, PredictedTripleSet

Normalization = Literal["pair", "global"]

PAIR_BATCH = 4096

STAGES = ("full", "post_partition", "post_htem", "final")


@torch.no_grad()
def relation_scores(kge: KgeModel, pairs: np.ndarray) -> np.ndarray:
    """Raw embedding scores of every relation for each (head, tail) pair, shape (P, n_r)."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    relations = torch.arange(kge.n_relations)[None, :]
    blocks = []
    for start in range(0, len(pairs), PAIR_BATCH):
        block = torch.as_tensor(pairs[start:start + PAIR_BATCH])
        blocks.append(kge.score(block[:, 0:1], relations, block[:, 1:2]))
    if not blocks:
        return np.empty((0, kge.n_relations))
    return torch.cat(blocks).cpu().numpy()


def _softmax(scores: np.ndarray, axis=None) -> np.ndarray:
    shifted = scores - scores.max(axis=axis, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=axis, keepdims=True)


def score_pairs_relations(
    kge: KgeModel,
    pairs: np.ndarray,
    theta_hrt: float,
    normalization: Normalization = "pair"
) -> List[Tuple[int, int, int, float]]:
    """
    Softmax-normalized relation scores for many pairs.

    With ``normalization="pair"`` each pair's n_r candidates are normalized on their
    own and kept above theta_hrt / n_r; ``"global"`` normalizes all P * n_r
    candidates together and keeps scores above theta_hrt / (P * n_r).
    """
    if theta_hrt <= 0:
        raise ValueError("theta_hrt must be positive")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return []
    scores = relation_scores(kge, pairs)
    if normalization == "global":
        softmax = _softmax(scores)
        threshold = theta_hrt / scores.size
    else:
        softmax = _softmax(scores, axis=1)
        threshold = theta_hrt / scores.shape[1]
    rows, relations = np.nonzero(softmax > threshold)
    return [
        (int(pairs[i, 0]), int(r), int(pairs[i, 1]), float(softmax[i, r]))
        for i, r in zip(rows.tolist(), relations.tolist())
    ]


def score_pair_relations(kge: KgeModel, pair: Tuple[int, int], theta_hrt: float) -> List[Tuple[int, int, int, float]]:
    """Scored candidates (h, r, t, s_hrt) of one pair with s_hrt > theta_hrt / n_r."""
    return score_pairs_relations(kge, np.array([pair]), theta_hrt)


def collect_pairs(
    partition: PartitionResult,
    htem_model: HtemModel,
    theta_ht: float,
    progress: bool = False
) -> Dict[Tuple[int, int], Tuple[float, int]]:
    """Predicted pairs over all subgraphs with their best pair score and its subgraph."""
    best: Dict[Tuple[int, int], Tuple[float, int]] = {}
    subgraphs = tqdm(partition.subgraphs, desc="pairs", disable=not progress)
    for subgraph in subgraphs:
        for pair, y in predict_pairs(htem_model, subgraph, theta_ht).items():
            if pair not in best or y > best[pair][0]:
                best[pair] = (y, subgraph.index)
    return best


def gpht_predict(
    kg: KnowledgeGraph,
    partition: PartitionResult,
    htem_model: HtemModel,
    kge_model: KgeModel,
    theta_ht: float,
    theta_hrt: float,
    normalization: Normalization = "pair",
    progress: bool = False,
    pairs: Optional[Dict[Tuple[int, int], Tuple[float, int]]] = None
) -> PredictedTripleSet:
    """
    Args:
        kg: Training graph
        partition: Partition of ``kg``
        htem_model: Trained head-tail model
        kge_model: Trained embedding model
        theta_ht: Pair threshold in [0, 1]
        theta_hrt: Relation threshold (> 0), divided by the candidate count
        normalization: "pair" (per-pair softmax) or "global"
        pairs: Pair scores from ``collect_pairs`` at a threshold <= theta_ht; reused
            instead of running the head-tail model again

    Returns:
        Predictions with provenance, thresholds, staged counts and timings
    """
    started = time.perf_counter()
    if pairs is None:
        best = collect_pairs(partition, htem_model, theta_ht, progress)
    else:
        best = {pair: value for pair, value in pairs.items() if value[0] > theta_ht}
    pair_seconds = time.perf_counter() - started

    n_r = kg.n_relations
    staged = {
        "full": kg.n_entities * n_r * kg.n_entities,
        "post_partition": sum(s.n_entities ** 2 for s in partition.subgraphs) * n_r,
        "post_htem": len(best) * n_r,
    }
    thresholds = {"theta_ht": theta_ht, "theta_hrt": theta_hrt}

    if not best:
        logger.warning(f"No pair scored above theta_ht={theta_ht}; prediction is empty")
        staged["final"] = 0
        return PredictedTripleSet(
            thresholds=thresholds, staged_counts=staged,
            metadata={"normalization": normalization, "seconds": {"pairs": pair_seconds, "relations": 0.0}},
        )

    pairs = np.array(sorted(best), dtype=np.int64)
    scored = score_pairs_relations(kge_model, pairs, theta_hrt, normalization)
    triples = np.array([(h, r, t) for h, r, t, _ in scored], dtype=np.int64).reshape(-1, 3)
    known = kg.contains_many(triples) if len(triples) else np.zeros(0, dtype=bool)

    entries = []
    for (h, r, t, s), is_known in zip(scored, known.tolist()):
        if is_known:
            continue
        y, subgraph = best[(h, t)]
        entries.append(PredictedTriple(h, r, t, s, pair_score=y, subgraph=subgraph))

    predicted = PredictedTripleSet.from_scored(
        entries,
        thresholds=thresholds,
        staged_counts=staged,
        metadata={
            "normalization": normalization,
            "seconds": {"pairs": pair_seconds, "relations": time.perf_counter() - started - pair_seconds},
        },
    )
    staged["final"] = len(predicted)
    logger.info(
        f"✓ GPHT predicted {len(predicted)} triples from {len(best)} pairs "
        f"({staged_percentages(staged)['final']:.4%} of the candidate space)"
    )
    return predicted


def staged_percentages(staged: Dict[str, int]) -> Dict[str, float]:
    """Share of the full candidate space left after each stage."""
    full = staged.get("full") or 1
    return {stage: staged[stage] / full for stage in STAGES if stage in staged}


def reduction_report(predicted: PredictedTripleSet) -> List[Dict[str, float]]:
    staged = predicted.staged_counts
    shares = staged_percentages(staged)
    return [
        {"stage": stage, "candidates": staged[stage], "share": shares[stage]}
        for stage in STAGES if stage in staged
    ]


def training_overlap(predicted: PredictedTripleSet, kg: KnowledgeGraph) -> List[Triple]:
    """Predicted triples that are training triples; empty for every valid prediction."""
    return [t for t in predicted.triples() if t in kg.triple_set]
