"""Baselines: rule mining, rule quality, rule inference and exhaustive KGE scoring."""

import itertools

import numpy as np
import pytest
import torch
from scipy import sparse

from tspkit.baselines import (
    RelationMatrices,
    Rule,
    StreamingLogSumExp,
    binarize,
    kge_tsp_predict,
    load_rules,
    mine_rules,
    rule_inference,
    rule_quality,
    ruletensor_predict,
    sample_rules,
    save_rules,
)
from tspkit.kg import KnowledgeGraph, add_inverse_and_selfloop
from tspkit.kge import HAKE, PairRE

HUSBAND, MOTHER, FATHER = 0, 1, 2


@pytest.fixture
def family_rule_kg() -> KnowledgeGraph:
    """a husbandOf b, b motherOf c, a fatherOf c; d husbandOf e, e motherOf f."""
    entities = ["a", "b", "c", "d", "e", "f"]
    relations = ["husbandOf", "motherOf", "fatherOf"]
    triples = [(0, HUSBAND, 1), (1, MOTHER, 2), (0, FATHER, 2), (3, HUSBAND, 4), (4, MOTHER, 5)]
    return KnowledgeGraph(entities, relations, triples)


def brute_force_quality(kg: KnowledgeGraph, head: int, body):
    """Ground the body by walking every path; inverse ids step against the edge."""
    n_r = kg.n_relations
    forward, backward = {}, {}
    for h, r, t in kg.triples.tolist():
        forward.setdefault((h, r), set()).add(t)
        backward.setdefault((t, r), set()).add(h)

    body_pairs = set()
    for start in range(kg.n_entities):
        frontier = {start}
        for relation in body:
            step = forward if relation < n_r else backward
            base = relation % n_r
            frontier = set().union(*(step.get((e, base), set()) for e in frontier)) if frontier else set()
        body_pairs |= {(start, end) for end in frontier}

    head_pairs = {(h, t) for h, r, t in kg.triples.tolist() if r == head}
    support = len(body_pairs & head_pairs)
    confidence = support / len(body_pairs) if body_pairs else None
    coverage = support / len(head_pairs) if head_pairs else 0.0
    return support, confidence, coverage


class TestRuleQuality:

    def test_family_example(self, family_rule_kg):
        assert rule_quality(family_rule_kg, (FATHER, (HUSBAND, MOTHER))) == (1, 0.5, 1.0)

    def test_body_that_never_fires(self, family_rule_kg):
        support, confidence, coverage = rule_quality(family_rule_kg, (HUSBAND, (FATHER, HUSBAND)))
        assert (support, confidence, coverage) == (0, None, 0.0)

    def test_empty_body_rejected(self, family_rule_kg):
        with pytest.raises(ValueError):
            rule_quality(family_rule_kg, (FATHER, ()))

    def test_inverse_body(self, family_rule_kg):
        # motherOf <- husbandOf^-1 ∧ fatherOf
        rule = Rule(MOTHER, (HUSBAND + 3, FATHER))
        assert rule_quality(family_rule_kg, rule) == (1, 1.0, 0.5)

    def test_matches_grounding_oracle_on_random_graphs(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            n_e = int(rng.integers(3, 51))
            n_r = int(rng.integers(1, 9))
            n_t = int(rng.integers(1, 3 * n_e))
            triples = np.column_stack([
                rng.integers(n_e, size=n_t), rng.integers(n_r, size=n_t), rng.integers(n_e, size=n_t)
            ])
            kg = KnowledgeGraph([f"e{i}" for i in range(n_e)], [f"r{i}" for i in range(n_r)], triples)
            matrices = RelationMatrices.from_kg(kg)
            for _ in range(5):
                length = int(rng.integers(1, 4))
                body = tuple(int(b) for b in rng.integers(2 * n_r, size=length))
                head = int(rng.integers(n_r))
                assert rule_quality(matrices, (head, body)) == brute_force_quality(kg, head, body), (head, body)


class TestRuleMining:

    def test_triangle_rule_is_found(self):
        kg = KnowledgeGraph(["a", "b", "c"], ["r1", "r2", "r3"], [(0, 0, 1), (1, 1, 2), (0, 2, 2)])
        candidates = sample_rules(add_inverse_and_selfloop(kg), 2, 500, np.random.default_rng(0))
        assert (2, (0, 1)) in candidates
        assert all(body != (head,) for head, body in candidates)

    def test_family_rule_mined(self, family_rule_kg):
        rules = mine_rules(family_rule_kg, 2, 2000, theta_conf=0.5, theta_hc=0.5, rng=np.random.default_rng(1))
        keys = {rule.key for rule in rules}
        assert (FATHER, (HUSBAND, MOTHER)) in keys
        assert all(rule.confidence >= 0.5 and rule.head_coverage >= 0.5 for rule in rules)
        ordered = [(-r.confidence, -r.head_coverage, r.head, r.body) for r in rules]
        assert ordered == sorted(ordered)

    def test_threads_do_not_change_rules(self, family_kg):
        first = mine_rules(family_kg, 3, 3000, 0.5, 0.05, np.random.default_rng(4), threads=1)
        second = mine_rules(family_kg, 3, 3000, 0.5, 0.05, np.random.default_rng(4), threads=3)
        assert first == second


class TestRuleInference:

    def test_family_inference(self, family_rule_kg):
        rule = Rule(FATHER, (HUSBAND, MOTHER), support=1, confidence=0.5, head_coverage=1.0)
        predicted = rule_inference(family_rule_kg, [rule])
        assert [(e.triple, e.score) for e in predicted] == [((3, FATHER, 5), 0.5)]
        assert predicted.metadata["stop_reason"] == "converged"
        assert predicted.metadata["additions"] == [1, 0]

    def test_conflicting_rules_keep_highest_confidence(self):
        kg = KnowledgeGraph(["x", "y"], ["h", "p", "q"], [(0, 1, 1), (0, 2, 1)])
        rules = [Rule(0, (1,), confidence=0.3), Rule(0, (2,), confidence=0.8)]
        predicted = rule_inference(kg, rules)
        assert [(e.triple, e.score) for e in predicted] == [((0, 0, 1), 0.8)]

    def test_chained_inference_and_max_iter(self):
        # likes <- knows and knows <- likes^-1 feed each other for three iterations
        kg = KnowledgeGraph(["a", "b"], ["knows", "likes"], [(0, 0, 1)])
        rules = [Rule(1, (0,), confidence=0.9), Rule(0, (3,), confidence=0.7)]
        full = rule_inference(kg, rules, max_iter=40, stop_ratio=0.0)
        assert {e.triple: e.score for e in full} == {(0, 1, 1): 0.9, (1, 0, 0): 0.7, (1, 1, 0): 0.9}
        capped = rule_inference(kg, rules, max_iter=1, stop_ratio=0.0)
        assert capped.triples() == [(0, 1, 1)]
        assert capped.metadata["stop_reason"] == "max_iter"

    def test_stop_ratio(self):
        kg = KnowledgeGraph(["a", "b"], ["knows", "likes"], [(0, 0, 1)])
        rules = [Rule(1, (0,), confidence=0.9), Rule(0, (3,), confidence=0.7)]
        predicted = rule_inference(kg, rules, max_iter=40, stop_ratio=2.0)
        assert predicted.metadata["stop_reason"] == "stop_ratio"
        assert predicted.metadata["iterations"] == 2

    def test_reflexive_triples_can_be_dropped(self):
        # siblingOf <- siblingOf ∧ siblingOf closes a-b-c into a clique, self pairs included
        kg = KnowledgeGraph(["a", "b", "c"], ["siblingOf"], [(0, 0, 1), (1, 0, 0), (1, 0, 2), (2, 0, 1)])
        rules = [Rule(0, (0, 0), confidence=0.5)]

        kept = rule_inference(kg, rules)
        assert {(0, 0, 0), (1, 0, 1), (2, 0, 2)} <= set(kept.triples())

        dropped = rule_inference(kg, rules, drop_reflexive=True)
        assert set(dropped.triples()) == {(0, 0, 2), (2, 0, 0)}
        assert dropped.metadata["stop_reason"] == "converged"
        assert dropped.metadata["drop_reflexive"] is True

    def test_ruletensor_never_predicts_reflexive_when_asked(self, family_kg):
        predicted, _ = ruletensor_predict(
            family_kg, 3, 2000, 0.5, 0.05, 5, 0.2, np.random.default_rng(7), drop_reflexive=True
        )
        assert all(e.head != e.tail for e in predicted)

    def test_never_predicts_training_triples(self, family_kg):
        predicted, _ = ruletensor_predict(family_kg, 3, 3000, 0.5, 0.05, 5, 0.2, np.random.default_rng(7))
        assert not set(predicted.triples()) & family_kg.triple_set

    def test_deterministic(self, family_kg):
        first, rules_a = ruletensor_predict(family_kg, 3, 2000, 0.6, 0.05, 5, 0.2, np.random.default_rng(3))
        second, rules_b = ruletensor_predict(family_kg, 3, 2000, 0.6, 0.05, 5, 0.2, np.random.default_rng(3))
        assert rules_a == rules_b
        assert first.entries == second.entries

    def test_binarize(self):
        matrix = sparse.csr_matrix(np.array([[0.0, 2.5], [0.7, 0.0]]))
        assert binarize(matrix).toarray().tolist() == [[0.0, 1.0], [1.0, 0.0]]


class TestRuleFiles:

    def test_round_trip(self, family_rule_kg, tmp_path):
        rules = [
            Rule(FATHER, (HUSBAND, MOTHER), 1, 0.5, 1.0, 2, 1),
            Rule(MOTHER, (HUSBAND + 3, FATHER), 1, 1.0, 0.5, 1, 2),
        ]
        path = save_rules(tmp_path / "rules.tsv", rules, family_rule_kg)
        lines = path.read_text().splitlines()
        assert lines[0] == "fatherOf\thusbandOf,motherOf\t1\t0.5\t1"
        assert lines[1] == "motherOf\thusbandOf^-1,fatherOf\t1\t1\t0.5"
        assert load_rules(path, family_rule_kg) == rules

    def test_empty_file(self, family_rule_kg, tmp_path):
        path = save_rules(tmp_path / "rules.tsv", [], family_rule_kg)
        assert load_rules(path, family_rule_kg) == []


class TestStreamingSoftmax:

    @pytest.mark.parametrize("spread", [1.0, 50.0])
    def test_matches_direct_softmax(self, spread):
        rng = np.random.default_rng(8)
        scores = rng.uniform(-spread, spread, size=1000)
        stream = StreamingLogSumExp()
        for block in np.array_split(scores, 7):
            stream.update(block)
        direct = np.exp(scores - scores.max())
        direct /= direct.sum()
        assert np.allclose(np.exp(scores - stream.value), direct, rtol=0, atol=1e-9)

    def test_merge_matches_single_stream(self):
        rng = np.random.default_rng(9)
        a, b = rng.uniform(-50, 50, 300), rng.uniform(-50, 50, 700)
        merged = StreamingLogSumExp().update(a).merge(StreamingLogSumExp().update(b))
        single = StreamingLogSumExp().update(np.concatenate([a, b]))
        assert merged.value == pytest.approx(single.value, abs=1e-12)
        assert merged.count == 1000

    def test_empty_stream(self):
        assert StreamingLogSumExp().value == -np.inf
        assert StreamingLogSumExp().merge(StreamingLogSumExp()).count == 0


class TestKgeTsp:

    @pytest.fixture
    def model(self, toy_kg):
        return HAKE(toy_kg.n_entities, toy_kg.n_relations, 3, generator=torch.Generator().manual_seed(6))

    def test_matches_exhaustive_softmax(self, toy_kg, model):
        theta = 1.5
        predicted = kge_tsp_predict(toy_kg, model, theta)

        candidates = list(itertools.product(range(6), range(2), range(6)))
        with torch.no_grad():
            raw = model(torch.tensor(candidates))
        softmax = torch.softmax(raw, dim=0).numpy()
        expected = {
            c: s for c, s in zip(candidates, softmax.tolist())
            if s > theta / len(candidates) and c not in toy_kg.triple_set
        }
        assert set(predicted.triples()) == set(expected)
        for entry in predicted:
            assert entry.score == pytest.approx(expected[entry.triple], rel=1e-9)
        assert predicted.staged_counts == {"full": 72, "final": len(expected)}

    def test_higher_threshold_only_removes(self, toy_kg, model):
        sets = [set(kge_tsp_predict(toy_kg, model, theta).triples()) for theta in (0.1, 0.5, 1.0, 2.0, 4.0)]
        assert sets[0]
        for looser, stricter in zip(sets, sets[1:]):
            assert stricter <= looser

    def test_threads_give_same_prediction(self, toy_kg, model):
        assert kge_tsp_predict(toy_kg, model, 1.0, threads=1).entries == kge_tsp_predict(toy_kg, model, 1.0, threads=4).entries

    def test_uniform_scores(self, toy_kg):
        model = PairRE(6, 2, 3)
        with torch.no_grad():
            model.relation_head.zero_()
            model.relation_tail.zero_()
        assert len(kge_tsp_predict(toy_kg, model, 2.0)) == 0
        assert len(kge_tsp_predict(toy_kg, model, 0.5)) == 72 - len(toy_kg.triples)

    def test_threshold_must_be_positive(self, toy_kg, model):
        with pytest.raises(ValueError):
            kge_tsp_predict(toy_kg, model, 0.0)
