"""
Family Dataset Generator
========================

Builds a relatively complete family knowledge graph: random family trees
contribute base facts (parentage, marriage, son/daughter links to the mother),
then kinship rules are applied to a fixpoint so the graph is closed under them.
A seeded split produces train/valid/test files in which every entity and
relation still occurs in training.

Usage:
    from tspkit.datagen import generate_family_kg, split_dataset, write_dataset

    rng = np.random.default_rng(7)
    kg = generate_family_kg(2378, 24, rng)
    split = split_dataset(kg, SplitRatios(), rng)
    write_dataset(split, "data/family", {"seed": 7})
"""

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse

from .config import SplitRatios
from .kg import INVERSE_MARKER, DatasetSplit, KnowledgeGraph, save_dataset

FAMILY_RELATIONS = (
    "fatherOf", "motherOf", "husbandOf", "wifeOf", "sonOf", "daughterOf",
    "brotherOf", "sisterOf", "grandfatherOf", "grandmotherOf", "uncleOf", "auntOf",
)

# head <- body; a trailing ^-1 reads the body relation backwards.
FAMILY_RULES = (
    ("fatherOf", ("husbandOf", "motherOf")),
    ("motherOf", ("wifeOf", "fatherOf")),
    ("wifeOf", ("husbandOf^-1",)),
    ("husbandOf", ("wifeOf^-1",)),
    ("sonOf", ("sonOf", "wifeOf")),
    ("sonOf", ("sonOf", "husbandOf")),
    ("daughterOf", ("daughterOf", "wifeOf")),
    ("daughterOf", ("daughterOf", "husbandOf")),
    ("brotherOf", ("sonOf", "motherOf")),
    ("sisterOf", ("daughterOf", "motherOf")),
    ("grandfatherOf", ("fatherOf", "fatherOf")),
    ("grandfatherOf", ("fatherOf", "motherOf")),
    ("grandmotherOf", ("motherOf", "fatherOf")),
    ("grandmotherOf", ("motherOf", "motherOf")),
    ("uncleOf", ("brotherOf", "fatherOf")),
    ("uncleOf", ("brotherOf", "motherOf")),
    ("auntOf", ("sisterOf", "fatherOf")),
    ("auntOf", ("sisterOf", "motherOf")),
    ("uncleOf", ("husbandOf", "auntOf")),
    ("auntOf", ("wifeOf", "uncleOf")),
)

MAX_CHILDREN = 5
MARRIAGE_PROBABILITY = 0.85
MALE, FEMALE = "m", "f"

Step = Tuple[int, bool]


@dataclass(frozen=True)
class FamilySchema:
    """Relation vocabulary and path rules ``head <- body`` over it."""
    relations: Tuple[str, ...] = FAMILY_RELATIONS
    rules: Tuple[Tuple[str, Tuple[str, ...]], ...] = FAMILY_RULES

    def __post_init__(self):
        known = set(self.relations)
        for head, body in self.rules:
            for name in (head,) + tuple(b.replace(INVERSE_MARKER, "") for b in body):
                if name not in known:
                    raise ValueError(f"rule relation {name!r} is not in the schema")

    def relation_id(self, name: str) -> int:
        return self.relations.index(name)

    def compiled_rules(self) -> List[Tuple[int, Tuple[Step, ...]]]:
        """Rules as (head id, ((relation id, inverse), ...))."""
        compiled = []
        for head, body in self.rules:
            steps = tuple(
                (self.relation_id(b.replace(INVERSE_MARKER, "")), b.endswith(INVERSE_MARKER))
                for b in body
            )
            compiled.append((self.relation_id(head), steps))
        return compiled

    def describe_rules(self) -> List[str]:
        return [f"{head} <- {' ∧ '.join(body)}" for head, body in self.rules]


@dataclass
class FamilyTree:
    """Base facts of generated families before closure."""
    genders: List[str] = field(default_factory=list)
    families: List[int] = field(default_factory=list)
    facts: List[Tuple[int, str, int]] = field(default_factory=list)

    def add_person(self, gender: str, family: int) -> int:
        self.genders.append(gender)
        self.families.append(family)
        return len(self.genders) - 1

    @property
    def n_people(self) -> int:
        return len(self.genders)


def family_sizes(n_people: int, n_families: int) -> List[int]:
    """Near-equal people budgets (at least 2 each), earlier families take the remainder."""
    n_families = max(1, min(n_families, n_people // 2))
    base, extra = divmod(n_people, n_families)
    return [base + (1 if i < extra else 0) for i in range(n_families)]


def sample_family_tree(n_people: int, n_families: int, rng: np.random.Generator) -> FamilyTree:
    """
    Grow each family breadth-first from a founding couple: every couple gets 1 to
    MAX_CHILDREN children, and a child marries a newcomer with
    MARRIAGE_PROBABILITY while the family budget lasts.
    """
    tree = FamilyTree()
    for family, budget in enumerate(family_sizes(n_people, n_families)):
        husband = tree.add_person(MALE, family)
        wife = tree.add_person(FEMALE, family)
        tree.facts.append((husband, "husbandOf", wife))
        remaining = budget - 2
        couples = deque([(husband, wife)])
        while couples and remaining > 0:
            father, mother = couples.popleft()
            for _ in range(int(rng.integers(1, MAX_CHILDREN + 1))):
                if remaining == 0:
                    break
                gender = MALE if rng.random() < 0.5 else FEMALE
                child = tree.add_person(gender, family)
                remaining -= 1
                tree.facts.append((father, "fatherOf", child))
                tree.facts.append((mother, "motherOf", child))
                tree.facts.append((child, "sonOf" if gender == MALE else "daughterOf", mother))
                if remaining > 0 and rng.random() < MARRIAGE_PROBABILITY:
                    spouse = tree.add_person(FEMALE if gender == MALE else MALE, family)
                    remaining -= 1
                    couple = (child, spouse) if gender == MALE else (spouse, child)
                    tree.facts.append((couple[0], "husbandOf", couple[1]))
                    couples.append(couple)
    return tree


def _relation_matrices(triples: np.ndarray, n_entities: int, n_relations: int) -> List[sparse.csr_matrix]:
    matrices = []
    for r in range(n_relations):
        rows = triples[triples[:, 1] == r] if len(triples) else np.empty((0, 3), dtype=np.int64)
        matrix = sparse.csr_matrix(
            (np.ones(len(rows)), (rows[:, 0], rows[:, 2])), shape=(n_entities, n_entities)
        )
        matrix.data[:] = 1.0
        matrices.append(matrix)
    return matrices


def _oriented(matrices: Sequence[sparse.csr_matrix], step: Step) -> sparse.csr_matrix:
    relation, inverse = step
    return matrices[relation].T.tocsr() if inverse else matrices[relation]


def _without_diagonal(matrix: sparse.spmatrix) -> sparse.csr_matrix:
    """0/1 copy of the nonzero off-diagonal cells."""
    coo = sparse.coo_matrix(matrix)
    keep = (coo.row != coo.col) & (coo.data != 0)
    cleaned = sparse.csr_matrix(
        (np.ones(int(keep.sum())), (coo.row[keep], coo.col[keep])), shape=matrix.shape
    )
    cleaned.data[:] = 1.0
    return cleaned


def family_closure(
    triples,
    n_entities: int,
    schema: Optional[FamilySchema] = None,
    max_rounds: int = 1000
) -> np.ndarray:
    """
    Close a triple set under the schema rules by delta-driven evaluation: each
    round only derivations using at least one triple added in the previous round
    are computed. Reflexive conclusions such as (x, brotherOf, x) are dropped.

    Returns:
        Closed triples sorted by (head, relation, tail)
    """
    schema = schema or FamilySchema()
    rules = schema.compiled_rules()
    n_r = len(schema.relations)
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)

    current = _relation_matrices(triples, n_entities, n_r)
    delta = [m.copy() for m in current]
    for round_number in range(1, max_rounds + 1):
        derived: Dict[int, sparse.csr_matrix] = {}
        for head, body in rules:
            for j, step in enumerate(body):
                changed = _oriented(delta, step)
                if changed.nnz == 0:
                    continue
                product = None
                for k, other in enumerate(body):
                    factor = changed if k == j else _oriented(current, other)
                    product = factor if product is None else product @ factor
                derived[head] = product if head not in derived else derived[head] + product

        added = 0
        delta = [sparse.csr_matrix((n_entities, n_entities)) for _ in range(n_r)]
        for head, product in derived.items():
            product = _without_diagonal(product)
            fresh = product - product.multiply(current[head])
            fresh.eliminate_zeros()
            if fresh.nnz == 0:
                continue
            added += fresh.nnz
            delta[head] = fresh
            merged = current[head] + fresh
            merged.data[:] = 1.0
            current[head] = merged
        logger.debug(f"Closure round {round_number}: {added} new triples")
        if added == 0:
            break

    rows = []
    for r, matrix in enumerate(current):
        coo = matrix.tocoo()
        rows.append(np.column_stack([coo.row, np.full(coo.nnz, r), coo.col]))
    closed = np.concatenate(rows).astype(np.int64) if rows else np.empty((0, 3), dtype=np.int64)
    return closed[np.lexsort((closed[:, 2], closed[:, 1], closed[:, 0]))]


def person_name(index: int) -> str:
    return f"person_{index:05d}"


def generate_family_kg(
    n_people: int,
    n_families: int,
    rng: np.random.Generator,
    schema: Optional[FamilySchema] = None
) -> KnowledgeGraph:
    """
    Random families closed under the kinship rules. Families never share an
    edge, so there are at least ``n_families`` components.

    Raises:
        ValueError: If n_people < 4 or n_families < 1
    """
    if n_people < 4 or n_families < 1:
        raise ValueError("need at least 4 people and 1 family")
    schema = schema or FamilySchema()
    tree = sample_family_tree(n_people, n_families, rng)
    base = np.array(
        [(h, schema.relation_id(r), t) for h, r, t in tree.facts], dtype=np.int64
    )
    closed = family_closure(base, tree.n_people, schema)
    kg = KnowledgeGraph([person_name(i) for i in range(tree.n_people)], schema.relations, closed)
    logger.info(
        f"✓ Generated {tree.n_people} people in {n_families} families: "
        f"{len(base)} base facts closed to {len(kg)} triples"
    )
    return kg


def split_sizes(n: int, ratios: SplitRatios) -> Tuple[int, int, int]:
    """Floor of valid and test shares; the remainder goes to train."""
    n_valid = math.floor(n * ratios.valid + 1e-9)
    n_test = math.floor(n * ratios.test + 1e-9)
    return n - n_valid - n_test, n_valid, n_test


def _entity_counts(triples: np.ndarray, n_entities: int) -> np.ndarray:
    counts = np.zeros(n_entities, dtype=np.int64)
    np.add.at(counts, triples[:, 0], 1)
    distinct = triples[:, 0] != triples[:, 2]
    np.add.at(counts, triples[distinct, 2], 1)
    return counts


def split_dataset(kg: KnowledgeGraph, ratios: SplitRatios, rng: np.random.Generator) -> DatasetSplit:
    """
    Uniform random split in which every entity and relation keeps at least one
    training triple. A held-out triple that would strand one is swapped with a
    training triple whose removal strands nothing; without such a partner it is
    pinned to train.
    """
    triples = kg.triples
    n = len(triples)
    n_train, n_valid, n_test = split_sizes(n, ratios)
    order = rng.permutation(n)
    part = np.empty(n, dtype=np.int8)
    part[order[:n_train]] = 0
    part[order[n_train:n_train + n_valid]] = 1
    part[order[n_train + n_valid:]] = 2

    train_mask = part == 0
    entity_counts = _entity_counts(triples[train_mask], kg.n_entities)
    relation_counts = np.bincount(triples[train_mask, 1], minlength=kg.n_relations)
    pinned = 0

    def move(index: int, delta: int):
        h, r, t = triples[index]
        entity_counts[h] += delta
        if t != h:
            entity_counts[t] += delta
        relation_counts[r] += delta

    for index in order[n_train:].tolist():
        h, r, t = triples[index]
        if entity_counts[h] and entity_counts[t] and relation_counts[r]:
            continue
        in_train = np.flatnonzero(part == 0)
        candidates = in_train[
            (entity_counts[triples[in_train, 0]] >= 2)
            & (entity_counts[triples[in_train, 2]] >= 2)
            & (relation_counts[triples[in_train, 1]] >= 2)
        ]
        if len(candidates):
            partner = int(rng.choice(candidates))
            part[partner], part[index] = part[index], 0
            move(partner, -1)
        else:
            part[index] = 0
            pinned += 1
        move(index, +1)

    if pinned:
        logger.warning(f"Pinned {pinned} held-out triples to train to keep entity/relation coverage")

    train = kg.with_triples(triples[np.sort(np.flatnonzero(part == 0))])
    valid = triples[np.sort(np.flatnonzero(part == 1))]
    test = triples[np.sort(np.flatnonzero(part == 2))]
    return DatasetSplit(train=train, valid=valid, test=test)


def write_dataset(split: DatasetSplit, directory: Union[str, Path], manifest: Optional[Mapping[str, Any]] = None) -> Path:
    """Dataset files plus ``generation.json`` (sizes, rules and caller-supplied details)."""
    directory = save_dataset(split, directory)
    record = dict(manifest or {})
    record.setdefault("rules", FamilySchema().describe_rules())
    record["sizes"] = {
        "entities": split.train.n_entities,
        "relations": split.train.n_relations,
        "train": len(split.train),
        "valid": len(split.valid),
        "test": len(split.test),
    }
    with open(directory / "generation.json", "w", encoding="utf-8") as handle:
        json.dump(record, handle, indent=2)
        handle.write("\n")
    return directory
