# Standard library modules.
from typing import Optional

# Third party modules.
import torch
import torch.nn.functional as F
from torch import nn

# Local modules.
from .base import KgeModel, Repr

# Globals and constants variables.


def pairre_score_parts(h: Repr, r: Repr, t: Repr, p: int = 1) -> torch.Tensor:
    """-||h * r_H - t * r_T||_p"""
    (h_vec,), (r_head, r_tail), (t_vec,) = h, r, t
    return -torch.linalg.vector_norm(h_vec * r_head - t_vec * r_tail, ord=p, dim=-1)


def pairre_attention(h: Repr, t: Repr, relations: Repr) -> torch.Tensor:
    (h_vec,), (t_vec,) = h, t
    r_head, r_tail = relations
    return h_vec @ r_head.transpose(-1, -2) - t_vec @ r_tail.transpose(-1, -2)


class PairRE(KgeModel):
    """Paired relation vectors projecting unit-norm head and tail entities."""

    kind = "pairre"
    entity_parts = 1
    relation_parts = 2

    def __init__(self, *args, norm_p: int = 1, **kwargs):
        super().__init__(*args, **kwargs)
        self.norm_p = norm_p

    def _create_parameters(self, dtype):
        n_e, n_r, d = self.n_entities, self.n_relations, self.dim
        self.entity = nn.Parameter(torch.empty(n_e, d, dtype=dtype))
        self.relation_head = nn.Parameter(torch.empty(n_r, d, dtype=dtype))
        self.relation_tail = nn.Parameter(torch.empty(n_r, d, dtype=dtype))

    def reset_parameters(self, generator: Optional[torch.Generator] = None):
        with torch.no_grad():
            self.entity.normal_(generator=generator)
            self.relation_head.uniform_(-1.0, 1.0, generator=generator)
            self.relation_tail.uniform_(-1.0, 1.0, generator=generator)
        self.after_step()

    def after_step(self):
        with torch.no_grad():
            self.entity.copy_(F.normalize(self.entity, p=2, dim=-1))

    def entity_repr(self, ids):
        return (self.entity[ids],)

    def relation_repr(self, ids):
        return self.relation_head[ids], self.relation_tail[ids]

    def score_repr(self, h, r, t):
        return pairre_score_parts(h, r, t, self.norm_p)

    def infer_relation(self, h, t):
        return h[0], t[0]

    def attention_repr(self, h, t, relations):
        return pairre_attention(h, t, relations)

    def entity_rows(self):
        return self.entity

    def relation_rows(self):
        return torch.cat([self.relation_head, self.relation_tail], dim=1)

    def load_rows(self, entity_rows, relation_rows):
        d = self.dim
        with torch.no_grad():
            self.entity.copy_(entity_rows)
            self.relation_head.copy_(relation_rows[:, :d])
            self.relation_tail.copy_(relation_rows[:, d:])
