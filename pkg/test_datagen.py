"""
Family Dataset Generator Tests
==============================
"""

import json

import numpy as np
import pytest

from tspkit.config import SplitRatios
from tspkit.datagen import (
    FAMILY_RELATIONS,
    FAMILY_RULES,
    FamilySchema,
    family_closure,
    family_sizes,
    generate_family_kg,
    split_dataset,
    split_sizes,
    write_dataset,
)
from tspkit.kg import KnowledgeGraph, connected_components, load_dataset

SCHEMA = FamilySchema()


def named(triples):
    return {(h, FAMILY_RELATIONS[r], t) for h, r, t in np.asarray(triples).tolist()}


def test_one_couple_one_son_closure():
    rid = SCHEMA.relation_id
    base = [(0, rid("husbandOf"), 1), (0, rid("fatherOf"), 2), (1, rid("motherOf"), 2), (2, rid("sonOf"), 1)]
    closed = family_closure(base, 3)

    assert named(closed) == {
        (0, "husbandOf", 1), (1, "wifeOf", 0),
        (0, "fatherOf", 2), (1, "motherOf", 2),
        (2, "sonOf", 1), (2, "sonOf", 0),
    }
    assert np.array_equal(family_closure(closed, 3), closed)


def test_closure_derives_grandparents_and_uncles():
    rid = SCHEMA.relation_id
    # grandfather 0, his sons 1 and 2, grandchild 3 (child of 1)
    base = [
        (0, rid("fatherOf"), 1), (0, rid("fatherOf"), 2), (1, rid("fatherOf"), 3),
        (1, rid("sonOf"), 4), (2, rid("sonOf"), 4), (4, rid("motherOf"), 1), (4, rid("motherOf"), 2),
    ]
    closed = named(family_closure(base, 5))

    assert (0, "grandfatherOf", 3) in closed
    assert (4, "grandmotherOf", 3) in closed
    assert (2, "brotherOf", 1) in closed and (1, "brotherOf", 2) in closed
    assert (2, "uncleOf", 3) in closed
    assert not any(h == t for h, _, t in closed)


def test_generated_graph_is_closed(family_kg):
    assert family_kg.n_relations == 12
    assert family_kg.n_entities <= 60
    assert np.array_equal(family_closure(family_kg.triples, family_kg.n_entities), family_kg.triples)


def test_gender_consistency(family_kg):
    fathers = {h for h, r, _ in family_kg if r == SCHEMA.relation_id("fatherOf")}
    mothers = {h for h, r, _ in family_kg if r == SCHEMA.relation_id("motherOf")}
    husbands = {h for h, r, _ in family_kg if r == SCHEMA.relation_id("husbandOf")}
    wives = {h for h, r, _ in family_kg if r == SCHEMA.relation_id("wifeOf")}
    assert not fathers & mothers
    assert not husbands & wives


def test_families_are_separate_components(family_kg):
    assert len(connected_components(family_kg)) >= 2


def test_family_sizes():
    assert family_sizes(10, 3) == [4, 3, 3]
    assert sum(family_sizes(2378, 24)) == 2378


def test_generate_rejects_tiny_inputs():
    with pytest.raises(ValueError):
        generate_family_kg(3, 1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        generate_family_kg(10, 0, np.random.default_rng(0))


def test_schema_rejects_unknown_relations():
    with pytest.raises(ValueError):
        FamilySchema(rules=(("fatherOf", ("cousinOf",)),))
    assert len(SCHEMA.describe_rules()) == len(FAMILY_RULES)


def test_split_sizes():
    assert split_sizes(100, SplitRatios(train=0.72, valid=0.08, test=0.20)) == (72, 8, 20)
    assert split_sizes(7, SplitRatios(train=1.0, valid=0.0, test=0.0)) == (7, 0, 0)


def test_everything_to_train(family_kg):
    split = split_dataset(family_kg, SplitRatios(train=1.0, valid=0.0, test=0.0), np.random.default_rng(0))
    assert len(split.train) == len(family_kg)
    assert len(split.valid) == len(split.test) == 0


def test_split_is_a_covering_partition(family_kg, family_split):
    parts = [family_split.train.triple_set, family_split.valid_set, family_split.test_set]
    assert sum(len(p) for p in parts) == len(family_kg)
    assert frozenset().union(*parts) == family_kg.triple_set

    train = family_split.train.triples
    held_out = np.concatenate([family_split.valid, family_split.test])
    assert set(held_out[:, 1].tolist()) <= set(train[:, 1].tolist())
    entities_in_train = set(train[:, 0].tolist()) | set(train[:, 2].tolist())
    assert entities_in_train == set(range(family_kg.n_entities))


def test_split_is_deterministic(family_kg):
    ratios = SplitRatios(train=0.72, valid=0.08, test=0.20)
    first = split_dataset(family_kg, ratios, np.random.default_rng(5))
    second = split_dataset(family_kg, ratios, np.random.default_rng(5))
    assert np.array_equal(first.test, second.test)
    assert np.array_equal(first.train.triples, second.train.triples)


def test_write_dataset(tmp_path, family_split):
    directory = write_dataset(family_split, tmp_path / "family", {"seed": 11})

    generation = json.loads((directory / "generation.json").read_text(encoding="utf-8"))
    assert generation["seed"] == 11
    assert len(generation["rules"]) == len(FAMILY_RULES)
    assert generation["sizes"]["test"] == len(family_split.test)

    loaded = load_dataset(directory)
    assert len(loaded.train) == len(family_split.train)
    assert len(loaded.test) == len(family_split.test)


@pytest.mark.slow
def test_default_size_matches_the_reference_bracket():
    kg = generate_family_kg(2378, 24, np.random.default_rng(0))
    assert 1_500 <= kg.n_entities <= 2378
    assert kg.n_relations == 12
    assert 15_000 <= len(kg) <= 30_000
    assert isinstance(kg, KnowledgeGraph)
