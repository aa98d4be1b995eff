"""
Subgraph episodes: one subgraph split into support and query triples, with
negative pairs sampled among its unconnected ordered entity pairs.
All ids inside an episode are local (positions in the sorted entity array).
"""

# Standard library modules.
from dataclasses import dataclass
from typing import Optional

# Third party modules.
import numpy as np
import torch

# Local modules.
from ..partition import Subgraph

# Globals and constants variables.
NEGATIVE_RETRIES = 50


@dataclass
class SubgraphEpisode:
    """
    Attributes:
        subgraph_index: Index of the source subgraph
        entities: Global ids of the subgraph entities, ascending
        support: Support triples (local ids)
        query: Query triples (local ids)
        positive_pairs: Distinct (head, tail) pairs of the query triples
        negative_pairs: Sampled pairs with no triple inside the subgraph
        edges: Augmented support edges (target, relation, source) incl. inverses and self-loops
    """
    subgraph_index: int
    entities: torch.Tensor
    support: torch.Tensor
    query: torch.Tensor
    positive_pairs: torch.Tensor
    negative_pairs: torch.Tensor
    edges: torch.Tensor

    @property
    def n_entities(self) -> int:
        return len(self.entities)


def local_triples(subgraph: Subgraph) -> np.ndarray:
    """Subgraph triples re-indexed to positions in ``subgraph.entities``."""
    triples = subgraph.triples.copy()
    if len(triples):
        triples[:, 0] = np.searchsorted(subgraph.entities, triples[:, 0])
        triples[:, 2] = np.searchsorted(subgraph.entities, triples[:, 2])
    return triples


def augmented_edges(support: np.ndarray, n_entities: int, n_relations: int) -> np.ndarray:
    """
    Message edges of a support set: each (h, r, t) lets h aggregate from t through r,
    its inverse lets t aggregate from h through r + n_r, and every entity gets a
    self-loop with relation 2 n_r.
    """
    support = support.reshape(-1, 3)
    forward = support[:, [0, 1, 2]]
    inverse = np.column_stack([support[:, 2], support[:, 1] + n_relations, support[:, 0]])
    everyone = np.arange(n_entities, dtype=np.int64)
    selfloop = np.column_stack([everyone, np.full(n_entities, 2 * n_relations), everyone])
    return np.concatenate([forward, inverse, selfloop]).astype(np.int64)


def connected_pair_keys(triples: np.ndarray, n_entities: int) -> np.ndarray:
    return np.unique(triples[:, 0] * n_entities + triples[:, 2]) if len(triples) else np.empty(0, dtype=np.int64)


def sample_negative_pairs(
    triples: np.ndarray,
    n_entities: int,
    count: int,
    rng: np.random.Generator,
    max_retries: int = NEGATIVE_RETRIES
) -> np.ndarray:
    """Ordered pairs (h, t), h != t, with no triple (h, ., t); duplicates allowed."""
    if count <= 0 or n_entities < 2:
        return np.empty((0, 2), dtype=np.int64)
    connected = connected_pair_keys(triples, n_entities)
    found = []
    missing = count
    for _ in range(max_retries):
        heads = rng.integers(n_entities, size=missing)
        tails = rng.integers(n_entities, size=missing)
        keys = heads * n_entities + tails
        ok = (heads != tails) & ~np.isin(keys, connected)
        found.append(np.column_stack([heads[ok], tails[ok]]))
        missing -= int(ok.sum())
        if missing == 0:
            break
    return np.concatenate(found).astype(np.int64) if found else np.empty((0, 2), dtype=np.int64)


def _as_long(array) -> torch.Tensor:
    return torch.as_tensor(np.ascontiguousarray(array), dtype=torch.long)


def _episode(index, subgraph, support, query, negatives, n_relations) -> SubgraphEpisode:
    positive = np.unique(query[:, [0, 2]], axis=0) if len(query) else np.empty((0, 2), dtype=np.int64)
    return SubgraphEpisode(
        subgraph_index=index,
        entities=_as_long(subgraph.entities),
        support=_as_long(support.reshape(-1, 3)),
        query=_as_long(query.reshape(-1, 3)),
        positive_pairs=_as_long(positive.reshape(-1, 2)),
        negative_pairs=_as_long(negatives.reshape(-1, 2)),
        edges=_as_long(augmented_edges(support, subgraph.n_entities, n_relations)),
    )


def make_episode(
    subgraph: Subgraph,
    n_relations: int,
    rng: np.random.Generator,
    query_fraction: float = 0.2,
    negative_ratio: float = 1.0
) -> SubgraphEpisode:
    """
    Shuffle the subgraph triples into support and query (at least one of each when
    the subgraph has two or more triples) and sample ``negative_ratio`` negative
    pairs per positive pair.
    """
    triples = local_triples(subgraph)
    n = len(triples)
    n_query = int(round(n * query_fraction))
    if n >= 2:
        n_query = min(max(n_query, 1), n - 1)
    else:
        n_query = 0
    order = rng.permutation(n)
    query, support = triples[order[:n_query]], triples[order[n_query:]]

    n_positive = len(np.unique(query[:, [0, 2]], axis=0)) if n_query else 0
    negatives = sample_negative_pairs(
        triples, subgraph.n_entities, int(round(negative_ratio * n_positive)), rng
    )
    return _episode(subgraph.index, subgraph, support, query, negatives, n_relations)


def full_episode(subgraph: Subgraph, n_relations: int, pairs: Optional[np.ndarray] = None) -> SubgraphEpisode:
    """Every subgraph triple as support; ``pairs`` (local) ride along as positives."""
    triples = local_triples(subgraph)
    episode = _episode(
        subgraph.index, subgraph, triples, np.empty((0, 3), dtype=np.int64),
        np.empty((0, 2), dtype=np.int64), n_relations
    )
    if pairs is not None:
        episode.positive_pairs = torch.as_tensor(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    return episode


def unconnected_pairs(subgraph: Subgraph) -> np.ndarray:
    """All ordered local pairs (h, t), h != t, without a triple, in row-major order."""
    n = subgraph.n_entities
    blocked = np.eye(n, dtype=bool)
    triples = local_triples(subgraph)
    if len(triples):
        blocked[triples[:, 0], triples[:, 2]] = True
    return np.argwhere(~blocked).astype(np.int64)
