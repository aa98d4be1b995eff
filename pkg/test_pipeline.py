"""GPHT prediction: relation scoring, thresholds, staged counts and provenance."""

import numpy as np
import pytest
import torch

from tspkit.config import HtemTrainConfig, PartitionParams
from tspkit.htem import HtemModel
from tspkit.kge import HAKE, PairRE
from tspkit.partition import construct_subgraphs, partition_best_of
from tspkit.pipeline import (
    collect_pairs,
    gpht_predict,
    reduction_report,
    relation_scores,
    score_pair_relations,
    score_pairs_relations,
    staged_percentages,
    training_overlap,
)


@pytest.fixture
def toy_partition(toy_kg):
    return construct_subgraphs(toy_kg, [frozenset({0, 1, 2, 3}), frozenset({4, 5})])


@pytest.fixture
def htem_model(toy_kg):
    torch.manual_seed(0)
    config = HtemTrainConfig(kind="hake", dim=6, n_bases=2, hidden=8)
    return HtemModel(toy_kg.n_entities, toy_kg.n_relations, config).eval()


@pytest.fixture
def kge_model(toy_kg):
    return HAKE(toy_kg.n_entities, toy_kg.n_relations, 4, generator=torch.Generator().manual_seed(1))


def flat_pairre(n_entities: int, n_relations: int) -> PairRE:
    """Every relation scores every pair 0."""
    model = PairRE(n_entities, n_relations, 3)
    with torch.no_grad():
        model.relation_head.zero_()
        model.relation_tail.zero_()
    return model


class TestRelationScoring:

    def test_single_relation_always_normalizes_to_one(self):
        model = HAKE(3, 1, 4, generator=torch.Generator().manual_seed(2))
        assert score_pair_relations(model, (0, 2), theta_hrt=0.5) == [(0, 0, 2, pytest.approx(1.0))]
        assert score_pair_relations(model, (0, 2), theta_hrt=1.0) == []

    @pytest.mark.parametrize("theta,kept", [(0.5, 4), (0.999, 4), (1.0, 0), (2.0, 0)])
    def test_uniform_scores(self, theta, kept):
        model = flat_pairre(3, 4)
        scored = score_pair_relations(model, (0, 1), theta)
        assert len(scored) == kept
        assert all(s == pytest.approx(0.25) for _, _, _, s in scored)

    def test_softmax_matches_direct_computation(self, kge_model):
        scored = score_pairs_relations(kge_model, np.array([[0, 3], [2, 5]]), theta_hrt=1e-9)
        assert len(scored) == 2 * kge_model.n_relations
        for h, r, t, s in scored:
            raw = kge_model.score(h, torch.arange(kge_model.n_relations), t)
            assert s == pytest.approx(torch.softmax(raw, dim=0)[r].item(), rel=1e-12)

    def test_global_normalization_sums_to_one(self, kge_model):
        pairs = np.array([[0, 3], [2, 5], [1, 4]])
        scored = score_pairs_relations(kge_model, pairs, theta_hrt=1e-9, normalization="global")
        assert len(scored) == 3 * kge_model.n_relations
        assert sum(s for *_, s in scored) == pytest.approx(1.0)

    def test_relation_scores_shape(self, kge_model):
        assert relation_scores(kge_model, np.array([[0, 1]] * 5000)).shape == (5000, 2)
        assert relation_scores(kge_model, np.empty((0, 2))).shape == (0, 2)

    def test_threshold_must_be_positive(self, kge_model):
        with pytest.raises(ValueError):
            score_pairs_relations(kge_model, np.array([[0, 1]]), theta_hrt=0.0)


class TestGpht:

    def test_staged_counts(self, toy_kg, toy_partition, htem_model, kge_model):
        predicted = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht=0.0, theta_hrt=0.5)
        staged = predicted.staged_counts
        assert staged["full"] == 6 * 2 * 6
        assert staged["post_partition"] == (4 ** 2 + 2 ** 2) * 2
        # 8 unconnected pairs in the chain, (f, e) in the pair subgraph
        assert staged["post_htem"] == 9 * 2
        assert staged["final"] == len(predicted) <= staged["post_htem"]
        assert staged["full"] >= staged["post_partition"] >= staged["post_htem"] >= staged["final"]

    def test_provenance(self, toy_kg, toy_partition, htem_model, kge_model):
        predicted = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht=0.0, theta_hrt=0.5)
        assert len(predicted) > 0
        for entry in predicted:
            assert 0.0 < entry.pair_score < 1.0
            expected = 1 if entry.head in (4, 5) else 0
            assert entry.subgraph == expected
        assert predicted.thresholds == {"theta_ht": 0.0, "theta_hrt": 0.5}
        assert set(predicted.metadata["seconds"]) == {"pairs", "relations"}

    def test_never_predicts_training_triples(self, family_split):
        kg = family_split.train
        partition = partition_best_of(kg, PartitionParams(hops=2, n_min=5, n_max=20, candidates_per_draw=5, seed=3))
        torch.manual_seed(0)
        htem = HtemModel(kg.n_entities, kg.n_relations, HtemTrainConfig(kind="pairre", dim=4, n_bases=2, hidden=8))
        kge = PairRE(kg.n_entities, kg.n_relations, 4, generator=torch.Generator().manual_seed(5))
        predicted = gpht_predict(kg, partition, htem.eval(), kge, theta_ht=0.0, theta_hrt=0.5)
        assert training_overlap(predicted, kg) == []

    def test_everything_filtered_by_pair_threshold(self, toy_kg, toy_partition, htem_model, kge_model, caplog):
        predicted = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht=1.0, theta_hrt=0.5)
        assert len(predicted) == 0
        assert predicted.staged_counts["post_htem"] == 0
        assert predicted.staged_counts["final"] == 0
        assert "prediction is empty" in caplog.text

    def test_reused_pair_scores_give_same_prediction(self, toy_kg, toy_partition, htem_model, kge_model):
        pairs = collect_pairs(toy_partition, htem_model, 0.0)
        theta_ht = float(np.median([y for y, _ in pairs.values()]))
        fresh = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht, 0.5)
        reused = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht, 0.5, pairs=pairs)
        assert fresh.entries == reused.entries
        assert fresh.staged_counts == reused.staged_counts

    @pytest.mark.parametrize("normalization", ["pair", "global"])
    def test_higher_relation_threshold_only_removes(self, toy_kg, toy_partition, htem_model, kge_model, normalization):
        pairs = collect_pairs(toy_partition, htem_model, 0.0)
        sets = [
            set(gpht_predict(toy_kg, toy_partition, htem_model, kge_model, 0.0, theta, normalization, pairs=pairs).triples())
            for theta in (0.05, 0.5, 1.0, 1.5, 1.9)
        ]
        assert sets[0]
        for looser, stricter in zip(sets, sets[1:]):
            assert stricter <= looser

    def test_collected_pairs_are_unconnected(self, toy_kg, toy_partition, htem_model):
        pairs = collect_pairs(toy_partition, htem_model, 0.0)
        assert len(pairs) == 9
        connected = {(h, t) for h, _, t in toy_kg.triples.tolist()}
        assert not connected & set(pairs)


class TestReduction:

    def test_percentages(self):
        shares = staged_percentages({"full": 200, "post_partition": 50, "post_htem": 10, "final": 2})
        assert shares == {"full": 1.0, "post_partition": 0.25, "post_htem": 0.05, "final": 0.01}

    def test_report_rows(self, toy_kg, toy_partition, htem_model, kge_model):
        predicted = gpht_predict(toy_kg, toy_partition, htem_model, kge_model, theta_ht=0.0, theta_hrt=0.5)
        report = reduction_report(predicted)
        assert [row["stage"] for row in report] == ["full", "post_partition", "post_htem", "final"]
        assert report[0]["share"] == 1.0
