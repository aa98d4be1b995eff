"""
RuleTensor-TSP
==============

Path rules ``head <- r_1 ∧ ... ∧ r_k`` mined by random walks over the graph with
inverse relations, scored with sparse relation matrices, and applied by an
iterative sparse fixpoint that records each inferred cell with the best
confidence of the rules deriving it.

Body relations use augmented ids: ``r`` for an original relation, ``r + n_r``
for its inverse. Rule files hold one rule per line::

    head_relation<TAB>body_1,body_2,...<TAB>support<TAB>confidence<TAB>head_coverage

with inverse body relations written as ``<name>^-1``.

Usage:
    from tspkit.baselines.rules import mine_rules, rule_inference

    rules = mine_rules(split.train, max_length=3, n_walks=20000, theta_conf=0.85, theta_hc=0.05, rng=rng)
    predicted = rule_inference(split.train, rules, max_iter=40, stop_ratio=0.2)
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse

from ..kg import INVERSE_MARKER, AugmentedKG, KnowledgeGraph, add_inverse_and_selfloop
from ..prediction import PredictedTripleSet

Body = Tuple[int, ...]


@dataclass(frozen=True)
class Rule:
    """
    Attributes:
        head: Original relation id concluded by the rule
        body: Ordered augmented relation ids
        support: Pairs satisfying both body and head
        confidence: support / body pairs
        head_coverage: support / head triples
        body_count: Pairs satisfying the body
        head_count: Triples of the head relation
    """
    head: int
    body: Body
    support: int = 0
    confidence: float = 0.0
    head_coverage: float = 0.0
    body_count: int = 0
    head_count: int = 0

    @property
    def key(self) -> Tuple[int, Body]:
        return (self.head, self.body)

    def describe(self, kg: KnowledgeGraph) -> str:
        body = " ∧ ".join(relation_name(kg, r) for r in self.body)
        return f"{kg.relations[self.head]} <- {body}"


class RelationMatrices:
    """
    Boolean (0/1 float) sparse adjacency matrix per original relation; inverse
    ids resolve to transposes.
    """

    def __init__(self, matrices: Sequence[sparse.csr_matrix], n_entities: int):
        self.matrices = list(matrices)
        self.n_entities = n_entities

    @classmethod
    def from_kg(cls, kg: KnowledgeGraph) -> "RelationMatrices":
        return cls(build_relation_matrices(kg), kg.n_entities)

    @property
    def n_relations(self) -> int:
        return len(self.matrices)

    def __getitem__(self, relation: int) -> sparse.csr_matrix:
        n_r = self.n_relations
        if relation < n_r:
            return self.matrices[relation]
        if relation < 2 * n_r:
            return self.matrices[relation - n_r].T.tocsr()
        raise IndexError(f"relation id {relation} has no matrix")

    def body(self, body: Body) -> sparse.csr_matrix:
        """Binarized product of the body matrices (pairs joined by at least one path)."""
        product = self[body[0]]
        for relation in body[1:]:
            product = binarize(product @ self[relation])
        return binarize(product)


def build_relation_matrices(kg: KnowledgeGraph) -> List[sparse.csr_matrix]:
    """One n_e x n_e 0/1 matrix per relation; nonzeros equal the relation's triple count."""
    n = kg.n_entities
    triples = kg.triples
    matrices = []
    for r in range(kg.n_relations):
        rows = triples[triples[:, 1] == r]
        matrix = sparse.csr_matrix(
            (np.ones(len(rows)), (rows[:, 0], rows[:, 2])), shape=(n, n), dtype=np.float64
        )
        matrices.append(binarize(matrix))
    return matrices


def binarize(matrix: sparse.spmatrix) -> sparse.csr_matrix:
    """Every nonzero cell becomes 1."""
    matrix = sparse.csr_matrix(matrix, copy=True)
    matrix.eliminate_zeros()
    matrix.data = np.ones_like(matrix.data)
    return matrix


def relation_name(kg: KnowledgeGraph, relation: int) -> str:
    n_r = kg.n_relations
    if relation < n_r:
        return kg.relations[relation]
    return f"{kg.relations[relation - n_r]}{INVERSE_MARKER}"


def relation_from_name(kg: KnowledgeGraph, name: str) -> int:
    if name.endswith(INVERSE_MARKER):
        return kg.relation_id(name[:-len(INVERSE_MARKER)]) + kg.n_relations
    return kg.relation_id(name)


def _inverse(relation: int, n_r: int) -> int:
    return relation + n_r if relation < n_r else relation - n_r


def sample_rules(
    kg: AugmentedKG,
    max_length: int,
    n_walks: int,
    rng: np.random.Generator
) -> List[Tuple[int, Body]]:
    """
    Candidate rules from random walks.

    Each walk starts at a uniform entity and takes up to ``max_length`` steps,
    choosing a relation uniformly among the current entity's outgoing relations and
    then a tail uniformly. After step i a triple (e_0, r, e_i) yields
    ``r <- r_1 ∧ ... ∧ r_i`` and a triple (e_i, r, e_0) yields the reversed body
    with every relation inverted. The self-loop relation is never walked.

    Returns:
        Distinct (head, body) pairs in discovery order
    """
    n_r = kg.n_base_relations
    base_pairs = kg.base.by_pair
    steps: Dict[int, List[Tuple[int, np.ndarray]]] = {}
    for entity, edges in kg.by_head.items():
        by_relation: Dict[int, List[int]] = {}
        for r, t in edges:
            if r != kg.selfloop_relation_id:
                by_relation.setdefault(r, []).append(t)
        steps[entity] = [(r, np.array(sorted(ts))) for r, ts in sorted(by_relation.items())]

    found: Dict[Tuple[int, Body], None] = {}

    def emit(head: int, body: Body):
        if body == (head,):
            return
        found.setdefault((head, body), None)

    for _ in range(n_walks):
        start = int(rng.integers(kg.n_entities))
        current, path = start, []
        for _ in range(max_length):
            options = steps.get(current)
            if not options:
                break
            relation, tails = options[int(rng.integers(len(options)))]
            current = int(tails[int(rng.integers(len(tails)))])
            path.append(relation)
            for head in sorted(base_pairs.get((start, current), ())):
                emit(head, tuple(path))
            for head in sorted(base_pairs.get((current, start), ())):
                emit(head, tuple(_inverse(r, n_r) for r in reversed(path)))

    return list(found)


def rule_quality(kg: Union[KnowledgeGraph, RelationMatrices], rule) -> Tuple[int, Optional[float], float]:
    """
    Support, confidence and head coverage of a rule.

    Returns:
        (support, confidence, head_coverage); confidence is None when the body never fires
    """
    matrices = kg if isinstance(kg, RelationMatrices) else RelationMatrices.from_kg(kg)
    head, body = (rule.head, rule.body) if isinstance(rule, Rule) else rule
    if not body:
        raise ValueError("rule body must not be empty")
    body_matrix = matrices.body(tuple(body))
    head_matrix = matrices[head]
    support = int(head_matrix.multiply(body_matrix).nnz)
    body_count = int(body_matrix.nnz)
    head_count = int(head_matrix.nnz)
    confidence = support / body_count if body_count else None
    coverage = support / head_count if head_count else 0.0
    return support, confidence, coverage


def _scored_rule(matrices: RelationMatrices, candidate: Tuple[int, Body]) -> Optional[Rule]:
    head, body = candidate
    body_matrix = matrices.body(body)
    body_count = int(body_matrix.nnz)
    if body_count == 0:
        return None
    head_matrix = matrices[head]
    support = int(head_matrix.multiply(body_matrix).nnz)
    head_count = int(head_matrix.nnz)
    return Rule(
        head=head,
        body=body,
        support=support,
        confidence=support / body_count,
        head_coverage=support / head_count if head_count else 0.0,
        body_count=body_count,
        head_count=head_count,
    )


def mine_rules(
    kg: KnowledgeGraph,
    max_length: int,
    n_walks: int,
    theta_conf: float,
    theta_hc: float,
    rng: np.random.Generator,
    threads: int = 1
) -> List[Rule]:
    """
    Sample candidate rules and keep those with confidence >= theta_conf and head
    coverage >= theta_hc, sorted by confidence, head coverage, then (head, body).
    """
    augmented = kg if isinstance(kg, AugmentedKG) else add_inverse_and_selfloop(kg)
    base = augmented.base
    candidates = sample_rules(augmented, max_length, n_walks, rng)
    matrices = RelationMatrices.from_kg(base)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(lambda c: _scored_rule(matrices, c), candidates))
    else:
        scored = [_scored_rule(matrices, c) for c in candidates]

    rules = [
        rule for rule in scored
        if rule is not None and rule.confidence >= theta_conf and rule.head_coverage >= theta_hc
    ]
    rules.sort(key=lambda r: (-r.confidence, -r.head_coverage, r.head, r.body))
    logger.info(f"✓ Mined {len(rules)} rules from {len(candidates)} candidates ({n_walks} walks)")
    return rules


def rule_inference(
    kg: KnowledgeGraph,
    rules: Sequence[Rule],
    max_iter: int = 40,
    stop_ratio: float = 0.2,
    drop_reflexive: bool = False
) -> PredictedTripleSet:
    """
    Apply rules until nothing new is inferred, the number of additions drops below
    ``stop_ratio`` times the previous iteration's, or ``max_iter`` iterations.

    Each iteration evaluates every rule on the matrices as they stood at its start;
    new cells are weighted by confidence and a cell derived by several rules keeps
    the highest one. With ``drop_reflexive`` no (e, r, e) cell is ever added, so
    none feeds later iterations either.
    """
    matrices = RelationMatrices.from_kg(kg)
    n = kg.n_entities
    inferred = [sparse.csr_matrix((n, n), dtype=np.float64) for _ in range(kg.n_relations)]
    history: List[int] = []
    stop_reason = "max_iter"

    for iteration in range(1, max_iter + 1):
        additions: Dict[int, sparse.csr_matrix] = {}
        for rule in rules:
            body = matrices.body(rule.body)
            fresh = body - body.multiply(matrices[rule.head])
            if drop_reflexive:
                fresh = fresh - sparse.diags(fresh.diagonal(), format="csr")
            fresh.eliminate_zeros()
            if fresh.nnz == 0:
                continue
            fresh = fresh * rule.confidence
            current = additions.get(rule.head)
            additions[rule.head] = fresh if current is None else current.maximum(fresh)

        added = 0
        snapshot = list(matrices.matrices)
        for head, cells in additions.items():
            cells = sparse.csr_matrix(cells)
            cells.eliminate_zeros()
            added += cells.nnz
            snapshot[head] = binarize(snapshot[head] + cells)
            inferred[head] = inferred[head] + cells
        matrices = RelationMatrices(snapshot, n)
        history.append(added)
        logger.debug(f"Rule inference iteration {iteration}: {added} new triples")

        if added == 0:
            stop_reason = "converged"
            break
        if len(history) > 1 and added < stop_ratio * history[-2]:
            stop_reason = "stop_ratio"
            break

    rows = []
    for relation, cells in enumerate(inferred):
        coo = cells.tocoo()
        rows.extend(zip(coo.row.tolist(), [relation] * coo.nnz, coo.col.tolist(), coo.data.tolist()))
    predicted = PredictedTripleSet.from_scored(
        rows,
        thresholds={"max_iter": max_iter, "stop_ratio": stop_ratio},
        metadata={
            "iterations": len(history), "additions": history, "stop_reason": stop_reason,
            "drop_reflexive": drop_reflexive,
        },
    )
    logger.info(
        f"✓ Rule inference: {len(predicted)} triples in {len(history)} iterations ({stop_reason})"
    )
    return predicted


def ruletensor_predict(
    kg: KnowledgeGraph,
    max_length: int,
    n_walks: int,
    theta_conf: float,
    theta_hc: float,
    max_iter: int,
    stop_ratio: float,
    rng: np.random.Generator,
    threads: int = 1,
    drop_reflexive: bool = False
) -> Tuple[PredictedTripleSet, List[Rule]]:
    rules = mine_rules(kg, max_length, n_walks, theta_conf, theta_hc, rng, threads)
    if not rules:
        logger.warning("No rule passed the confidence and head-coverage thresholds")
    predicted = rule_inference(kg, rules, max_iter, stop_ratio, drop_reflexive)
    predicted.thresholds.update({"theta_conf": theta_conf, "theta_hc": theta_hc})
    predicted.metadata["rules"] = len(rules)
    return predicted, rules


def save_rules(path: Union[str, Path], rules: Sequence[Rule], kg: KnowledgeGraph) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "head": [kg.relations[r.head] for r in rules],
        "body": [",".join(relation_name(kg, b) for b in r.body) for r in rules],
        "support": [r.support for r in rules],
        "confidence": [r.confidence for r in rules],
        "head_coverage": [r.head_coverage for r in rules],
    })
    frame.to_csv(
        path, sep="\t", header=False, index=False, float_format="%.9g",
        quoting=csv.QUOTE_NONE, lineterminator="\n", encoding="utf-8"
    )
    return path


def load_rules(path: Union[str, Path], kg: KnowledgeGraph) -> List[Rule]:
    """
    Read a rule file. Body and head counts are recomputed from ``kg`` when the
    stored confidence still matches it; otherwise the stored values are kept.
    """
    path = Path(path)
    if path.stat().st_size == 0:
        return []
    frame = pd.read_csv(
        path, sep="\t", header=None, dtype=str, quoting=csv.QUOTE_NONE,
        keep_default_na=False, encoding="utf-8",
        names=["head", "body", "support", "confidence", "head_coverage"],
    )
    matrices = RelationMatrices.from_kg(kg)
    rules = []
    for row in frame.itertuples(index=False):
        head = kg.relation_id(row.head)
        body = tuple(relation_from_name(kg, name) for name in row.body.split(","))
        rule = Rule(head, body, int(row.support), float(row.confidence), float(row.head_coverage))
        recomputed = _scored_rule(matrices, rule.key)
        if recomputed is not None and math.isclose(recomputed.confidence, rule.confidence, rel_tol=1e-8):
            rule = recomputed
        rules.append(rule)
    return rules
