# Standard library modules.
import math
from typing import Optional

# Third party modules.
import torch
from torch import nn

# Local modules.
from .base import BIAS_CEILING, EPS, KgeModel, Repr

# Globals and constants variables.


def hake_score_parts(h: Repr, r: Repr, t: Repr, lam: float) -> torch.Tensor:
    """-||h_m * r_m - t_m||_2 - lam * ||sin((h_p + r_p - t_p) / 2)||_1"""
    h_mod, h_phase = h
    r_mod, r_phase = r[0], r[1]
    t_mod, t_phase = t
    modulus = torch.linalg.vector_norm(h_mod * r_mod - t_mod, ord=2, dim=-1)
    phase = torch.abs(torch.sin((h_phase + r_phase - t_phase) / 2)).sum(dim=-1)
    return -modulus - lam * phase


def hake_infer_relation(h: Repr, t: Repr) -> Repr:
    h_mod, h_phase = h
    t_mod, t_phase = t
    return t_mod / torch.clamp(h_mod, min=EPS), t_phase - h_phase


def hake_attention(h: Repr, t: Repr, relations: Repr) -> torch.Tensor:
    inferred_mod, inferred_phase = hake_infer_relation(h, t)
    r_mod, r_phase, r_bias = relations
    r_bias = torch.clamp(r_bias, max=BIAS_CEILING)
    mixed_mod = (r_mod + r_bias) / (1 - r_bias)
    return inferred_mod @ mixed_mod.transpose(-1, -2) + inferred_phase @ r_phase.transpose(-1, -2)


class HAKE(KgeModel):
    """
    Modulus/phase embeddings. Modulus parameters pass through ``abs`` so
    h_m >= 0.

    The relation bias only enters the relation-attention map, never the score.
    Standalone training therefore leaves ``relation_bias`` at its initial zeros;
    it is learned only where attention is trained, i.e. by the head-tail model's
    own relation outputs. Checkpoints still carry it so the row layout is fixed.
    """

    kind = "hake"
    entity_parts = 2
    relation_parts = 3

    def _create_parameters(self, dtype):
        n_e, n_r, d = self.n_entities, self.n_relations, self.dim
        self.entity_modulus = nn.Parameter(torch.empty(n_e, d, dtype=dtype))
        self.entity_phase = nn.Parameter(torch.empty(n_e, d, dtype=dtype))
        self.relation_modulus = nn.Parameter(torch.empty(n_r, d, dtype=dtype))
        self.relation_phase = nn.Parameter(torch.empty(n_r, d, dtype=dtype))
        self.relation_bias = nn.Parameter(torch.empty(n_r, d, dtype=dtype))

    def reset_parameters(self, generator: Optional[torch.Generator] = None):
        with torch.no_grad():
            self.entity_modulus.uniform_(0.5, 1.5, generator=generator)
            self.entity_phase.uniform_(-math.pi, math.pi, generator=generator)
            self.relation_modulus.uniform_(0.5, 1.5, generator=generator)
            self.relation_phase.uniform_(-math.pi, math.pi, generator=generator)
            self.relation_bias.zero_()

    def entity_repr(self, ids):
        return torch.abs(self.entity_modulus[ids]), self.entity_phase[ids]

    def relation_repr(self, ids):
        return torch.abs(self.relation_modulus[ids]), self.relation_phase[ids], self.relation_bias[ids]

    def score_repr(self, h, r, t):
        return hake_score_parts(h, r, t, self.lam)

    def infer_relation(self, h, t):
        return hake_infer_relation(h, t)

    def attention_repr(self, h, t, relations):
        return hake_attention(h, t, relations)

    def entity_rows(self):
        return torch.cat([self.entity_modulus, self.entity_phase], dim=1)

    def relation_rows(self):
        return torch.cat([self.relation_modulus, self.relation_phase, self.relation_bias], dim=1)

    def load_rows(self, entity_rows, relation_rows):
        d = self.dim
        with torch.no_grad():
            self.entity_modulus.copy_(entity_rows[:, :d])
            self.entity_phase.copy_(entity_rows[:, d:])
            self.relation_modulus.copy_(relation_rows[:, :d])
            self.relation_phase.copy_(relation_rows[:, d:2 * d])
            self.relation_bias.copy_(relation_rows[:, 2 * d:])
