"""Embedding models: score functions, relation maps, self-adversarial loss, training and checkpoints."""

import numpy as np
import pytest
import torch

from tspkit.config import KgeTrainConfig
from tspkit.errors import MissingArtifactError
from tspkit.kg import KnowledgeGraph
from tspkit.kge import (
    HAKE,
    PairRE,
    adversarial_loss,
    create_kge_model,
    get_kge_class,
    list_kge_models,
    load_kge,
    make_batch,
    negative_sample,
    sample_negative_batch,
    save_kge,
    self_adversarial_loss,
    tail_mrr,
    train_kge,
)
from tspkit.kge.hake import hake_attention, hake_infer_relation, hake_score_parts
from tspkit.kge.pairre import pairre_score_parts


def t(*values):
    return torch.tensor([values], dtype=torch.float64)


def small_config(**overrides) -> KgeTrainConfig:
    settings = dict(kind="hake", dim=4, lr=0.05, epochs=3, batch_size=4, negatives=2, seed=5)
    settings.update(overrides)
    return KgeTrainConfig(**settings)


class TestScores:

    def test_hake_modulus_term(self):
        score = hake_score_parts((t(2.0), t(0.0)), (t(3.0), t(0.0), t(0.0)), (t(5.0), t(0.0)), lam=1.0)
        assert score.item() == pytest.approx(-1.0)

    def test_hake_identity_relation_scores_zero(self):
        h = (t(0.7, 1.3), t(0.4, -2.0))
        r = (t(1.0, 1.0), t(0.0, 0.0), t(0.0, 0.0))
        assert hake_score_parts(h, r, h, lam=0.5).item() == pytest.approx(0.0)

    def test_hake_phase_term_is_periodic(self):
        h = (t(1.0), t(0.3))
        r = (t(1.0), t(0.5), t(0.0))
        shifted = (t(1.0), t(0.3 + 2 * np.pi))
        plain = hake_score_parts(h, r, (t(1.0), t(0.3)), lam=1.0)
        assert hake_score_parts(shifted, r, (t(1.0), t(0.3)), lam=1.0).item() == pytest.approx(plain.item())

    def test_pairre_example(self):
        score = pairre_score_parts((t(1.0),), (t(0.5), t(0.2)), (t(1.0),), p=1)
        assert score.item() == pytest.approx(-0.3)

    def test_pairre_l2_norm(self):
        score = pairre_score_parts((t(1.0, 0.0),), (t(3.0, 1.0), t(0.0, 4.0)), (t(1.0, 1.0),), p=2)
        assert score.item() == pytest.approx(-np.hypot(3.0, 3.0))

    def test_model_score_broadcasts(self):
        model = HAKE(5, 2, 3)
        scores = model.score(torch.tensor([[0], [1]]), torch.tensor([[1], [0]]), torch.arange(5)[None, :])
        assert scores.shape == (2, 5)
        assert scores[1, 3].item() == pytest.approx(model(torch.tensor([1, 0, 3])).item())

    @pytest.mark.parametrize("kind", ["hake", "pairre"])
    def test_scores_are_never_positive(self, kind):
        model = create_kge_model(kind, 6, 3, 4, generator=torch.Generator().manual_seed(1))
        triples = torch.cartesian_prod(torch.arange(6), torch.arange(3), torch.arange(6))
        assert (model(triples) <= 1e-12).all()

    def test_hake_gradient_matches_finite_differences(self):
        g = torch.Generator().manual_seed(3)
        parts = [torch.rand(1, 3, dtype=torch.float64, generator=g) + 0.2 for _ in range(7)]
        for p in parts:
            p.requires_grad_(True)

        def score(h_m, h_p, r_m, r_p, r_b, t_m, t_p):
            return hake_score_parts((h_m, h_p), (r_m, r_p, r_b), (t_m, t_p), lam=0.5)

        assert torch.autograd.gradcheck(score, parts)

    def test_pairre_gradient_matches_finite_differences(self):
        g = torch.Generator().manual_seed(4)
        parts = [torch.rand(1, 3, dtype=torch.float64, generator=g).requires_grad_(True) for _ in range(4)]

        def score(h, r_h, r_t, tail):
            return pairre_score_parts((h,), (r_h, r_t), (tail,), p=2)

        assert torch.autograd.gradcheck(score, parts)


class TestRelationMaps:

    def test_hake_infers_modulus_ratio(self):
        inferred_mod, inferred_phase = hake_infer_relation((t(2.0), t(0.5)), (t(6.0), t(1.5)))
        assert inferred_mod.item() == pytest.approx(3.0)
        assert inferred_phase.item() == pytest.approx(1.0)

    def test_hake_zero_bias_attention_uses_modulus(self):
        h, tail = (t(1.0, 2.0), t(0.0, 0.0)), (t(2.0, 2.0), t(0.0, 0.0))
        relations = (
            torch.tensor([[1.0, 0.0], [0.5, 0.5]], dtype=torch.float64),
            torch.zeros(2, 2, dtype=torch.float64),
            torch.zeros(2, 2, dtype=torch.float64),
        )
        attention = hake_attention(h, tail, relations)
        inferred = torch.tensor([[2.0, 1.0]], dtype=torch.float64)
        assert torch.allclose(attention, inferred @ relations[0].T)

    def test_relation_attention_has_one_entry_per_relation(self):
        model = PairRE(4, 3, 5)
        assert model.relation_attention(torch.tensor([0]), torch.tensor([2])).shape == (1, 3)

    def test_pairre_entities_stay_unit_norm(self):
        model = PairRE(4, 2, 3, generator=torch.Generator().manual_seed(0))
        with torch.no_grad():
            model.entity.mul_(5.0)
        model.after_step()
        assert torch.allclose(model.entity.norm(dim=-1), torch.ones(4, dtype=torch.float64))


class TestRegistry:

    def test_known_models(self):
        assert list_kge_models() == ["hake", "pairre"]
        assert get_kge_class("pairre") is PairRE

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="Unknown KGE model"):
            get_kge_class("transe")


class TestNegativeSampling:

    def test_corruptions_are_unknown_triples(self, toy_kg):
        rng = np.random.default_rng(0)
        negatives, mask = sample_negative_batch(toy_kg, toy_kg.triples, 4, rng)
        assert negatives.shape == (len(toy_kg.triples), 4, 3)
        assert mask.all()
        assert not toy_kg.contains_many(negatives.reshape(-1, 3)).any()
        # relation never changes
        assert (negatives[:, :, 1] == toy_kg.triples[:, 1:2]).all()

    def test_saturated_graph_warns(self, caplog):
        kg = KnowledgeGraph(["a", "b"], ["r"], [(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1)])
        found = negative_sample(kg, (0, 0, 1), 3, np.random.default_rng(0), max_retries=5)
        assert found == []
        assert "Negative sampling saturated" in caplog.text

    def test_k_must_be_positive(self, toy_kg):
        with pytest.raises(ValueError):
            negative_sample(toy_kg, (0, 0, 1), 0, np.random.default_rng(0))


class TestAdversarialLoss:

    def test_single_negative_has_full_weight(self, toy_kg):
        model = HAKE(toy_kg.n_entities, toy_kg.n_relations, 3, generator=torch.Generator().manual_seed(2))
        batch = make_batch(toy_kg, toy_kg.triples, 1, np.random.default_rng(1))
        adversarial_loss(model, batch, alpha=1.0)
        assert torch.allclose(batch.weights, torch.ones_like(batch.weights))

    def test_zero_temperature_gives_uniform_weights(self, toy_kg):
        model = HAKE(toy_kg.n_entities, toy_kg.n_relations, 3, generator=torch.Generator().manual_seed(2))
        batch = make_batch(toy_kg, toy_kg.triples, 4, np.random.default_rng(1))
        adversarial_loss(model, batch, alpha=0.0)
        assert torch.allclose(batch.weights, torch.full_like(batch.weights, 0.25))

    def test_loss_matches_direct_formula(self, toy_kg):
        model = PairRE(toy_kg.n_entities, toy_kg.n_relations, 3, generator=torch.Generator().manual_seed(2))
        batch = make_batch(toy_kg, toy_kg.triples[:2], 3, np.random.default_rng(1))
        loss = adversarial_loss(model, batch, alpha=0.7)

        expected = 0.0
        for i in range(2):
            pos = model(batch.positives[i])
            neg = model(batch.negatives[i])
            p = torch.softmax(0.7 * neg, dim=0)
            expected += -torch.nn.functional.logsigmoid(pos) - (p * torch.nn.functional.logsigmoid(-neg)).sum()
        assert loss.item() == pytest.approx(expected.item() / 2)

    def test_gradients_cover_every_parameter(self, toy_kg):
        model = HAKE(toy_kg.n_entities, toy_kg.n_relations, 3, generator=torch.Generator().manual_seed(2))
        batch = make_batch(toy_kg, toy_kg.triples, 2, np.random.default_rng(1))
        value, gradients = self_adversarial_loss(model, batch)
        assert np.isfinite(value)
        assert set(gradients) == {name for name, _ in model.named_parameters()}
        assert gradients["relation_bias"].abs().sum().item() == 0.0

    def test_relation_bias_learns_only_through_attention(self, toy_kg):
        model = train_kge(toy_kg, small_config())
        assert torch.count_nonzero(model.relation_bias).item() == 0

        model.zero_grad()
        model.relation_attention(torch.tensor([0]), torch.tensor([3])).sum().backward()
        assert model.relation_bias.grad.abs().sum().item() > 0.0


class TestTraining:

    @pytest.mark.parametrize("kind", ["hake", "pairre"])
    def test_family_training_ranks_true_tails_high(self, family_split, kind):
        kg = family_split.train
        config = small_config(kind=kind, dim=16, lr=0.05, epochs=40, batch_size=64, negatives=8)
        model = train_kge(kg, config)
        assert model.history[-1] < model.history[0]

        above = []
        with torch.no_grad():
            for h, r, t in kg.triples.tolist():
                scores = model.score(h, r, torch.arange(kg.n_entities))
                corrupted = torch.cat([scores[:t], scores[t + 1:]])
                above.append(scores[t].item() > corrupted.median().item())
        assert np.mean(above) >= 0.8

    def test_history_has_one_loss_per_epoch(self, toy_kg):
        model = train_kge(toy_kg, small_config())
        assert len(model.history) == 3
        assert all(np.isfinite(model.history))

    @pytest.mark.parametrize("kind", ["hake", "pairre"])
    def test_same_seed_same_model(self, toy_kg, kind):
        first = train_kge(toy_kg, small_config(kind=kind))
        second = train_kge(toy_kg, small_config(kind=kind))
        assert torch.equal(first.entity_rows(), second.entity_rows())
        assert torch.equal(first.relation_rows(), second.relation_rows())

    def test_validation_selects_a_model(self, toy_split):
        model = train_kge(toy_split.train, small_config(eval_every=1), valid=toy_split.valid)
        mrr = tail_mrr(model, toy_split.valid)
        assert 1 / toy_split.train.n_entities <= mrr <= 1.0

    def test_tail_mrr_of_nothing(self):
        assert tail_mrr(HAKE(3, 1, 2), np.empty((0, 3), dtype=np.int64)) == 0.0


class TestCheckpoint:

    @pytest.mark.parametrize("kind,norm_p", [("hake", 1), ("pairre", 1), ("pairre", 2)])
    def test_reload_is_exact(self, tmp_path, kind, norm_p):
        model = create_kge_model(
            kind, 7, 3, 4, lam=0.25, alpha=0.5, norm_p=norm_p, generator=torch.Generator().manual_seed(9)
        )
        path = save_kge(model, tmp_path / "model.ckpt")
        loaded = load_kge(path)

        assert loaded.kind == kind
        assert (loaded.lam, loaded.alpha) == (0.25, 0.5)
        assert getattr(loaded, "norm_p", 1) == norm_p
        assert torch.equal(loaded.entity_rows(), model.entity_rows())
        assert torch.equal(loaded.relation_rows(), model.relation_rows())

    def test_header_line(self, tmp_path):
        path = save_kge(PairRE(2, 1, 3, norm_p=2), tmp_path / "model.ckpt")
        assert path.read_text().splitlines()[0] == "pairre_l2 3 2 1 0.5 1.0"

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            load_kge(tmp_path / "absent.ckpt")
