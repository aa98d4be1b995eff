"""
Head-Tail Entity Model
======================

CompGCN-style relational encoder over a subgraph plus an attention-equipped
pair decoder scoring how likely an unconnected (head, tail) pair misses a relation.

Decoder input per ordered pair: h ‖ t ‖ a_ht ‖ s_ht, where a_ht is the
entity-attention weight of t seen from h and s_ht the relation-attention vector
of the embedding model (HAKE or PairRE) applied to element embeddings split
from the encoder output.
"""

# Standard library modules.
import math
from typing import Optional, Tuple

# Third party modules.
import torch
import torch.nn.functional as F
from torch import nn

# Local modules.
from ..config import HtemTrainConfig
from ..kge.hake import hake_attention, hake_score_parts
from ..kge.pairre import pairre_attention, pairre_score_parts

# Globals and constants variables.
PROB_EPS = 1e-12

ENTITY_PARTS = {"hake": 2, "pairre": 1}
RELATION_PARTS = {"hake": 3, "pairre": 2}


class CompGcnEncoder(nn.Module):
    """
    Relational message passing with direction-specific weights.

    Relation ids follow the augmented layout: originals ``[0, n_r)``, inverses
    ``[n_r, 2 n_r)`` and the self-loop ``2 n_r``. Edge rows are
    ``(target, relation, source)``: the target aggregates the composed source.
    """

    def __init__(
        self,
        n_entities: int,
        n_relations: int,
        dim: int,
        n_bases: int,
        n_layers: int,
        composition: str = "sub",
        dtype: torch.dtype = torch.float64
    ):
        super().__init__()
        self.n_relations = n_relations
        self.dim = dim
        self.n_layers = n_layers
        self.composition = composition

        self.entity_embedding = nn.Parameter(torch.empty(n_entities, dim, dtype=dtype))
        self.bases = nn.Parameter(torch.empty(n_bases, dim, dtype=dtype))
        self.base_weights = nn.Parameter(torch.empty(2 * n_relations + 1, n_bases, dtype=dtype))
        self.w_out = nn.ParameterList(
            [nn.Parameter(torch.empty(dim, dim, dtype=dtype)) for _ in range(n_layers)]
        )
        self.w_in = nn.ParameterList(
            [nn.Parameter(torch.empty(dim, dim, dtype=dtype)) for _ in range(n_layers)]
        )
        self.w_self = nn.ParameterList(
            [nn.Parameter(torch.empty(dim, dim, dtype=dtype)) for _ in range(n_layers)]
        )
        self.w_rel = nn.ParameterList(
            [nn.Parameter(torch.empty(dim, dim, dtype=dtype)) for _ in range(n_layers)]
        )
        self.reset_parameters()

    def reset_parameters(self):
        nn.init.xavier_uniform_(self.entity_embedding)
        nn.init.xavier_uniform_(self.bases)
        nn.init.xavier_uniform_(self.base_weights)
        for weights in (self.w_out, self.w_in, self.w_self, self.w_rel):
            for weight in weights:
                nn.init.xavier_uniform_(weight)

    def initial_relations(self) -> torch.Tensor:
        return self.base_weights @ self.bases

    def compose(self, entities: torch.Tensor, relations: torch.Tensor) -> torch.Tensor:
        if self.composition == "mult":
            return entities * relations
        return entities - relations

    def forward(self, h0: torch.Tensor, edges: torch.Tensor, r0: Optional[torch.Tensor] = None):
        """
        Args:
            h0: Initial entity representations (n_local, dim)
            edges: Augmented edges (E, 3) as (target, relation, source), local ids
            r0: Initial relation representations, defaults to the base mixture

        Returns:
            (entity representations, relation representations)
        """
        h = h0
        r = self.initial_relations() if r0 is None else r0
        targets, relations, sources = edges[:, 0], edges[:, 1], edges[:, 2]
        outgoing = relations < self.n_relations
        incoming = (relations >= self.n_relations) & (relations < 2 * self.n_relations)
        selfloop = relations == 2 * self.n_relations

        for layer in range(self.n_layers):
            messages = self.compose(h[sources], r[relations])
            aggregated = torch.zeros_like(h)
            for mask, weight in (
                (outgoing, self.w_out[layer]),
                (incoming, self.w_in[layer]),
                (selfloop, self.w_self[layer]),
            ):
                aggregated = aggregated.index_add(0, targets[mask], messages[mask] @ weight.T)
            h = torch.tanh(aggregated)
            r = r @ self.w_rel[layer].T
        return h, r


class HtemModel(nn.Module):
    """Encoder plus pair decoder for one embedding-model kind."""

    def __init__(
        self,
        n_entities: int,
        n_relations: int,
        config: HtemTrainConfig,
        dtype: torch.dtype = torch.float64
    ):
        super().__init__()
        self.n_entities = n_entities
        self.n_relations = n_relations
        self.config = config
        self.kind = config.kind
        self.dim = config.dim
        self.part_dim = config.dim // RELATION_PARTS[config.kind]
        if self.part_dim * RELATION_PARTS[config.kind] != config.dim:
            raise ValueError(f"dim {config.dim} cannot be split into {RELATION_PARTS[config.kind]} parts")

        self.encoder = CompGcnEncoder(
            n_entities, n_relations, config.dim, config.n_bases, config.n_layers,
            config.composition, dtype
        )
        self.element_split = nn.Linear(
            config.dim, ENTITY_PARTS[config.kind] * self.part_dim, bias=False, dtype=dtype
        )
        self.query = nn.Linear(config.dim, config.dim, bias=False, dtype=dtype)
        self.key = nn.Linear(config.dim, config.dim, bias=False, dtype=dtype)

        layers = []
        width = self.input_width
        for _ in range(config.mlp_layers - 1):
            layers += [
                nn.Linear(width, config.hidden, dtype=dtype),
                nn.LeakyReLU(config.slope),
                nn.Dropout(config.dropout),
            ]
            width = config.hidden
        layers.append(nn.Linear(width, 1, dtype=dtype))
        self.mlp = nn.Sequential(*layers)

    @property
    def input_width(self) -> int:
        width = 2 * self.dim
        if self.config.entity_attention:
            width += 1
        if self.config.relation_attention:
            width += self.n_relations
        return width

    @property
    def final_layer(self) -> nn.Linear:
        return self.mlp[-1]

    def entity_elements(self, reps: torch.Tensor) -> Tuple[torch.Tensor, ...]:
        """Split encoder outputs into embedding-model entity parts."""
        elements = self.element_split(reps)
        if self.kind == "hake":
            modulus, phase = elements.split(self.part_dim, dim=-1)
            return torch.abs(modulus), phase
        return (elements,)

    def relation_elements(self, reps: torch.Tensor) -> Tuple[torch.Tensor, ...]:
        """Split relation outputs: hake as (phase ‖ modulus ‖ bias), pairre as (head ‖ tail)."""
        parts = reps[:self.n_relations].split(self.part_dim, dim=-1)
        if self.kind == "hake":
            phase, modulus, bias = parts
            return torch.abs(modulus), phase, bias
        return parts

    def relation_attention(self, h_parts, t_parts, relation_parts) -> torch.Tensor:
        if self.kind == "hake":
            return hake_attention(h_parts, t_parts, relation_parts)
        return pairre_attention(h_parts, t_parts, relation_parts)

    def kge_score(self, h_parts, r_parts, t_parts) -> torch.Tensor:
        if self.kind == "hake":
            return hake_score_parts(h_parts, r_parts, t_parts, self.config.lam)
        return pairre_score_parts(h_parts, r_parts, t_parts, 1)

    def attention_logits(self, reps: torch.Tensor) -> torch.Tensor:
        return self.query(reps) @ self.key(reps).T / math.sqrt(self.dim)

    def decode(self, h_rep, t_rep, a_ht=None, s_ht=None) -> torch.Tensor:
        """Pair probability y_ht in (0, 1) from the decoder input slices."""
        features = [h_rep, t_rep]
        if self.config.entity_attention:
            features.append(a_ht.unsqueeze(-1))
        if self.config.relation_attention:
            features.append(s_ht)
        logits = self.mlp(torch.cat(features, dim=-1)).squeeze(-1)
        return torch.sigmoid(logits).clamp(PROB_EPS, 1.0 - PROB_EPS)

    def pair_probabilities(self, reps: torch.Tensor, relation_reps: torch.Tensor, pairs: torch.Tensor) -> torch.Tensor:
        """y_ht for local (head, tail) index pairs of shape (P, 2)."""
        heads, tails = pairs[:, 0], pairs[:, 1]
        a_ht = s_ht = None
        if self.config.entity_attention:
            attention = torch.softmax(self.attention_logits(reps), dim=-1)
            a_ht = attention[heads, tails]
        if self.config.relation_attention:
            elements = self.entity_elements(reps)
            s_ht = self.relation_attention(
                tuple(p[heads] for p in elements),
                tuple(p[tails] for p in elements),
                self.relation_elements(relation_reps),
            )
        return self.decode(reps[heads], reps[tails], a_ht, s_ht)

    def support_scores(self, reps: torch.Tensor, relation_reps: torch.Tensor, triples: torch.Tensor) -> torch.Tensor:
        """Embedding-model scores of local support triples on encoder-derived elements."""
        elements = self.entity_elements(reps)
        relations = self.relation_elements(relation_reps)
        return self.kge_score(
            tuple(p[triples[:, 0]] for p in elements),
            tuple(p[triples[:, 1]] for p in relations),
            tuple(p[triples[:, 2]] for p in elements),
        )

    def encode(self, episode):
        return self.encoder(self.encoder.entity_embedding[episode.entities], episode.edges)


def compgcn_forward(model: HtemModel, episode):
    """Entity and relation representations of an episode's support graph."""
    return model.encode(episode)


def entity_attention(model: HtemModel, h_rep: torch.Tensor, t_rep: torch.Tensor, all_entity_reps: torch.Tensor) -> torch.Tensor:
    """Softmax weight of t among all subgraph entities, seen from h."""
    query = model.query(h_rep)
    scale = math.sqrt(model.dim)
    logits = model.key(all_entity_reps) @ query / scale
    target = model.key(t_rep) @ query / scale
    return torch.exp(target - torch.logsumexp(logits, dim=0))


def pair_score(model: HtemModel, h_rep, t_rep, a_ht, s_ht) -> torch.Tensor:
    return model.decode(h_rep, t_rep, a_ht, s_ht)


def episode_loss(model: HtemModel, episode, kge_weight: float = 1.0) -> torch.Tensor:
    """
    Mean (1 - y) over query pairs + mean y over negative pairs
    + mean -log sigmoid(f) of support triples on encoder-derived embeddings.
    """
    reps, relation_reps = model.encode(episode)
    loss = reps.new_zeros(())
    if len(episode.positive_pairs):
        loss = loss + (1.0 - model.pair_probabilities(reps, relation_reps, episode.positive_pairs)).mean()
    if len(episode.negative_pairs):
        loss = loss + model.pair_probabilities(reps, relation_reps, episode.negative_pairs).mean()
    if kge_weight and len(episode.support):
        scores = model.support_scores(reps, relation_reps, episode.support)
        loss = loss - kge_weight * F.logsigmoid(scores).mean()
    return loss
