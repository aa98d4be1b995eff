# Standard library modules.
import abc
from typing import Optional, Tuple

# Third party modules.
import torch
from torch import nn

# Local modules.

# Globals and constants variables.
EPS = 1e-6
BIAS_CEILING = 1.0 - 1e-6

Repr = Tuple[torch.Tensor, ...]


class KgeModel(nn.Module, metaclass=abc.ABCMeta):
    """
    Shallow embedding model over integer entity/relation ids.

    Representations are tuples of ``(..., dim)`` tensors ("parts"); the score,
    relation-inference and relation-attention maps are defined on parts so the
    head-tail model can reuse them on encoder outputs.
    """

    kind: str = ""
    entity_parts: int = 1
    relation_parts: int = 1

    def __init__(
        self,
        n_entities: int,
        n_relations: int,
        dim: int,
        lam: float = 0.5,
        alpha: float = 1.0,
        dtype: torch.dtype = torch.float64,
        generator: Optional[torch.Generator] = None
    ):
        super().__init__()
        self.n_entities = n_entities
        self.n_relations = n_relations
        self.dim = dim
        self.lam = float(lam)
        self.alpha = float(alpha)
        self.history = []
        self._create_parameters(dtype)
        self.reset_parameters(generator)

    @abc.abstractmethod
    def _create_parameters(self, dtype: torch.dtype):  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def reset_parameters(self, generator: Optional[torch.Generator] = None):  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def entity_repr(self, ids: torch.Tensor) -> Repr:  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def relation_repr(self, ids: torch.Tensor) -> Repr:  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def score_repr(self, h: Repr, r: Repr, t: Repr) -> torch.Tensor:  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def infer_relation(self, h: Repr, t: Repr) -> Repr:  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def attention_repr(self, h: Repr, t: Repr, relations: Repr) -> torch.Tensor:  # pragma: no cover
        """Relation-attention scores of (h, t) against every relation in ``relations``."""
        raise NotImplementedError

    @abc.abstractmethod
    def entity_rows(self) -> torch.Tensor:  # pragma: no cover
        """Stored entity parameters as one row per entity (checkpoint layout)."""
        raise NotImplementedError

    @abc.abstractmethod
    def relation_rows(self) -> torch.Tensor:  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def load_rows(self, entity_rows: torch.Tensor, relation_rows: torch.Tensor):  # pragma: no cover
        raise NotImplementedError

    def after_step(self):
        """Hook run after every optimizer step."""

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def all_relations(self) -> Repr:
        return self.relation_repr(torch.arange(self.n_relations))

    def score(self, h, r, t) -> torch.Tensor:
        """Scores of broadcastable id tensors."""
        h, r, t = (torch.as_tensor(x, dtype=torch.long) for x in (h, r, t))
        return self.score_repr(self.entity_repr(h), self.relation_repr(r), self.entity_repr(t))

    def forward(self, triples: torch.Tensor) -> torch.Tensor:
        triples = torch.as_tensor(triples, dtype=torch.long)
        return self.score(triples[..., 0], triples[..., 1], triples[..., 2])

    def relation_attention(self, h, t) -> torch.Tensor:
        """Relation-attention vector (length n_r) for entity ids h, t."""
        h, t = (torch.as_tensor(x, dtype=torch.long) for x in (h, t))
        return self.attention_repr(self.entity_repr(h), self.entity_repr(t), self.all_relations())
