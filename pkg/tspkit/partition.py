"""
Graph Partition
===============

Soft vertex-cut partition of a knowledge graph into overlapping entity groups.

Steps:
1. Primary grouping: small connected components are merged through a pending
   small-set list; the remaining entities are grouped by randomized L-hop
   neighborhood draws whose hop-L boundary stays available to later groups.
2. Fine-tuning: every still-ungrouped entity pulls its 1-hop neighbors into the
   smallest group containing it.
3. Subgraph construction: each group induces the subgraph of all triples whose
   head and tail both belong to it, emitted as one subgraph per connected piece.

Usage:
    from tspkit.partition import partition_best_of, save_partition
    from tspkit.config import PartitionParams

    result = partition_best_of(split.train, PartitionParams(n_min=30, n_max=150, seed=7))
    print(result.stats)
    save_partition(result, split.train, "output/partition")
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse import csgraph
from loguru import logger

from .config import PartitionParams
from .errors import MissingArtifactError
from .kg import KnowledgeGraph, connected_components, save_triples

MANIFEST_NAME = "manifest.json"
STATS_NAME = "stats.csv"


@dataclass(frozen=True)
class NeighborhoodDraw:
    """One randomized L-hop neighborhood around a center entity."""
    center: int
    hops: Tuple[FrozenSet[int], ...]
    probabilities: Tuple[float, ...]
    d_avg: float

    @property
    def entities(self) -> FrozenSet[int]:
        return frozenset({self.center}).union(*self.hops)

    @property
    def interior(self) -> FrozenSet[int]:
        """Center plus hops 1..L-1; these leave the ungrouped set on emission."""
        return frozenset({self.center}).union(*self.hops[:-1])

    @property
    def boundary(self) -> FrozenSet[int]:
        return self.hops[-1] if self.hops else frozenset()

    def __len__(self):
        return len(self.entities)


@dataclass(frozen=True)
class Subgraph:
    """Induced subgraph of one entity group, in global ids."""
    index: int
    entities: np.ndarray
    triples: np.ndarray
    n_relations: int

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_triples(self) -> int:
        return len(self.triples)

    @property
    def density(self) -> float:
        return self.n_triples / self.n_entities ** 2 if self.n_entities else 0.0

    @property
    def candidate_space(self) -> int:
        return self.n_entities * self.n_relations * self.n_entities

    def view(self, kg: KnowledgeGraph) -> KnowledgeGraph:
        return kg.with_triples(self.triples)


@dataclass
class PartitionResult:
    groups: List[FrozenSet[int]]
    subgraphs: List[Subgraph]
    n_entities: int
    n_relations: int
    params: Optional[PartitionParams] = None
    stats: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def candidate_space(self) -> int:
        return sum(s.candidate_space for s in self.subgraphs)

    @property
    def full_candidate_space(self) -> int:
        return self.n_entities * self.n_relations * self.n_entities

    @property
    def remaining_fraction(self) -> float:
        full = self.full_candidate_space
        return self.candidate_space / full if full else 0.0


def hop_probability(hop: int, previous_size: int, d_avg: float, force: bool = False) -> float:
    """Inclusion probability of hop ``hop`` given the size of the previous hop."""
    if force or hop == 1:
        return 1.0
    if previous_size == 0:
        return 0.0
    return min(1.0, math.sqrt(d_avg / (2.0 * previous_size)))


def sample_neighborhood(
    kg: KnowledgeGraph,
    e: int,
    ungrouped: Set[int],
    params: PartitionParams,
    rng: np.random.Generator,
    d_avg: Optional[float] = None
) -> NeighborhoodDraw:
    """
    Draw the L-hop neighborhood of ``e`` restricted to ungrouped entities.

    Each frontier entity expands with probability p_i using one Bernoulli draw,
    visited in ascending id order so results are reproducible.
    """
    if e not in ungrouped:
        raise ValueError(f"center {e} is not ungrouped")
    if d_avg is None:
        d_avg = kg.average_degree

    gathered = {e}
    frontier: Set[int] = {e}
    hops, probabilities = [], []
    previous_size = 1
    for hop in range(1, params.hops + 1):
        p = hop_probability(hop, previous_size, d_avg, params.force_full_expansion)
        reached: Set[int] = set()
        for node in sorted(frontier):
            if rng.random() >= p:
                continue
            reached |= kg.neighbors(node) & ungrouped
        reached -= gathered
        gathered |= reached
        hops.append(frozenset(reached))
        probabilities.append(p)
        frontier = reached
        previous_size = len(reached)

    return NeighborhoodDraw(e, tuple(hops), tuple(probabilities), d_avg)


def select_balanced_draw(draws: Sequence[NeighborhoodDraw], target: float) -> NeighborhoodDraw:
    """Draw whose size is closest to ``target``; the earliest wins ties."""
    return min(enumerate(draws), key=lambda item: (abs(len(item[1]) - target), item[0]))[1]


def primary_entity_grouping(
    kg: KnowledgeGraph,
    params: PartitionParams,
    rng: Optional[np.random.Generator] = None
) -> Tuple[List[FrozenSet[int]], Set[int]]:
    """
    Group small components and randomized neighborhoods.

    Returns:
        (groups, ungrouped); residual small sets are flushed as their own groups
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)

    groups: List[FrozenSet[int]] = []
    small: List[FrozenSet[int]] = []
    ungrouped: Set[int] = set()

    for component in connected_components(kg):
        if len(component) >= params.n_min:
            ungrouped |= component
            continue
        if small and len(component) + len(small[-1]) < params.n_max:
            merged = small[-1] | component
            if len(merged) > params.n_min:
                groups.append(merged)
                small.pop()
            else:
                small[-1] = merged
        else:
            small.append(component)

    d_avg = kg.average_degree
    for center in rng.permutation(sorted(ungrouped)).tolist():
        if center not in ungrouped:
            continue
        draws = [
            sample_neighborhood(kg, center, ungrouped, params, rng, d_avg)
            for _ in range(params.candidates_per_draw)
        ]
        draw = select_balanced_draw(draws, params.target_size)
        if len(draw) > params.n_min:
            groups.append(draw.entities)
            ungrouped -= draw.interior

    if small:
        logger.debug(f"Flushing {len(small)} residual small component sets as groups")
        groups.extend(small)

    return groups, ungrouped


def entity_group_finetune(
    kg: KnowledgeGraph,
    groups: Sequence[FrozenSet[int]],
    ungrouped: Set[int],
    rng: np.random.Generator
) -> List[FrozenSet[int]]:
    """
    Attach every ungrouped entity's neighbors to the smallest group containing it.

    Entities outside every group join the smallest group holding one of their
    neighbors, or found a new group with their neighbors.
    """
    members = [set(g) for g in groups]
    membership: Dict[int, Set[int]] = {}
    for i, group in enumerate(members):
        for entity in group:
            membership.setdefault(entity, set()).add(i)

    def smallest(indices):
        return min(indices, key=lambda i: (len(members[i]), i))

    def extend(index: int, entities):
        for entity in entities:
            if entity not in members[index]:
                members[index].add(entity)
                membership.setdefault(entity, set()).add(index)

    for entity in rng.permutation(sorted(ungrouped)).tolist():
        neighbors = kg.neighbors(entity)
        if entity in membership:
            extend(smallest(membership[entity]), neighbors)
            continue
        candidates = set()
        for neighbor in neighbors:
            candidates |= membership.get(neighbor, set())
        if candidates:
            extend(smallest(candidates), {entity} | neighbors)
        else:
            members.append(set())
            extend(len(members) - 1, {entity} | neighbors)

    return [frozenset(g) for g in members]


class TripleIndex:
    """Triple positions grouped by head entity."""

    def __init__(self, kg: KnowledgeGraph):
        heads = kg.triples[:, 0]
        self.tails = kg.triples[:, 2]
        self.order = np.argsort(heads, kind="stable")
        self.starts = np.searchsorted(heads[self.order], np.arange(kg.n_entities + 1))

    def induced(self, entities: np.ndarray) -> np.ndarray:
        """Ascending positions of the triples with both endpoints in sorted ``entities``."""
        chunks = [self.order[self.starts[e]:self.starts[e + 1]] for e in entities.tolist()]
        positions = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        positions = positions[np.isin(self.tails[positions], entities)]
        return np.sort(positions)


def connected_pieces(entities: np.ndarray, triples: np.ndarray) -> List[np.ndarray]:
    """Connected components of the undirected graph ``triples`` spans over sorted ``entities``."""
    n = len(entities)
    local = np.searchsorted(entities, triples[:, [0, 2]]).reshape(-1, 2)
    adjacency = sparse.coo_matrix(
        (np.ones(len(local)), (local[:, 0], local[:, 1])), shape=(n, n)
    )
    n_pieces, labels = csgraph.connected_components(adjacency, directed=False)
    if n_pieces == 1:
        return [entities]
    return [entities[labels == label] for label in range(n_pieces)]


def construct_subgraphs(
    kg: KnowledgeGraph,
    groups: Sequence[FrozenSet[int]],
    params: Optional[PartitionParams] = None
) -> PartitionResult:
    """
    Induce the subgraph of every group and emit one subgraph per connected
    piece of it, so each emitted subgraph is connected.

    Groups merged from separate small components, and groups without internal
    triples, fall apart into their pieces. Identical pieces are emitted once,
    and a lone entity only when no larger piece holds it. The returned
    ``groups`` are the entity sets of the emitted subgraphs.
    """
    index = TripleIndex(kg)
    pieces: List[Tuple[np.ndarray, np.ndarray]] = []
    seen: Set[FrozenSet[int]] = set()
    n_split = 0
    for group in groups:
        entities = np.array(sorted(group), dtype=np.int64)
        triples = kg.triples[index.induced(entities)]
        parts = connected_pieces(entities, triples)
        n_split += len(parts) > 1
        for part in parts:
            key = frozenset(part.tolist())
            if key in seen:
                continue
            seen.add(key)
            pieces.append((part, triples[np.isin(triples[:, 0], part)]))

    held = set()
    for entities, _ in pieces:
        if len(entities) > 1:
            held.update(entities.tolist())
    induced = [(e, t) for e, t in pieces if len(e) > 1 or int(e[0]) not in held]
    if n_split:
        logger.debug(f"Split {n_split} disconnected groups into {len(induced)} connected subgraphs")
    kept = [frozenset(entities.tolist()) for entities, _ in induced]

    subgraphs = [
        Subgraph(index=i, entities=entities, triples=triples, n_relations=kg.n_relations)
        for i, (entities, triples) in enumerate(induced)
    ]
    stats = pd.DataFrame({
        "subgraph": [s.index for s in subgraphs],
        "entities": [s.n_entities for s in subgraphs],
        "relations": [int(len(np.unique(s.triples[:, 1]))) for s in subgraphs],
        "triples": [s.n_triples for s in subgraphs],
        "density": [s.density for s in subgraphs],
        "candidate_share": [
            s.candidate_space / max(1, kg.n_entities * kg.n_relations * kg.n_entities)
            for s in subgraphs
        ],
    })
    return PartitionResult(
        groups=kept,
        subgraphs=subgraphs,
        n_entities=kg.n_entities,
        n_relations=kg.n_relations,
        params=params,
        stats=stats,
    )


def partition_best_of(kg: KnowledgeGraph, params: PartitionParams) -> PartitionResult:
    """
    Full partition: balanced primary grouping, fine-tuning and subgraph construction.
    Deterministic given ``params.seed``.
    """
    rng = np.random.default_rng(params.seed)
    groups, ungrouped = primary_entity_grouping(kg, params, rng)
    logger.debug(f"Primary grouping: {len(groups)} groups, {len(ungrouped)} ungrouped entities")
    groups = entity_group_finetune(kg, groups, ungrouped, rng)
    result = construct_subgraphs(kg, groups, params)
    logger.info(
        f"✓ Partitioned {kg.n_entities} entities into {len(result.subgraphs)} subgraphs "
        f"({result.remaining_fraction:.1%} of the candidate space left)"
    )
    return result


def save_partition(result: PartitionResult, kg: KnowledgeGraph, directory: Union[str, Path]) -> Path:
    """Write per-subgraph triple files, the statistics table and a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for subgraph in result.subgraphs:
        path = save_triples(directory / f"subgraph_{subgraph.index:04d}.txt", kg, subgraph.triples)
        files.append(path.name)
    result.stats.to_csv(directory / STATS_NAME, index=False, lineterminator="\n")

    manifest = {
        "params": result.params.model_dump() if result.params else None,
        "n_entities": result.n_entities,
        "n_relations": result.n_relations,
        "candidate_space": result.candidate_space,
        "full_candidate_space": result.full_candidate_space,
        "groups": [[kg.entities[e] for e in sorted(group)] for group in result.groups],
        "files": files,
        "stats": result.stats.to_dict(orient="records"),
    }
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    return directory


def load_partition(directory: Union[str, Path], kg: KnowledgeGraph) -> PartitionResult:
    """
    Rebuild a partition from its manifest.

    Raises:
        MissingArtifactError: If the manifest does not exist
    """
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise MissingArtifactError(path, "run `tspkit partition` first")
    with open(path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    groups = [frozenset(kg.entity_id(name) for name in group) for group in manifest["groups"]]
    params = PartitionParams(**manifest["params"]) if manifest.get("params") else None
    return construct_subgraphs(kg, groups, params)
