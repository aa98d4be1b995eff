"""
Knowledge Graph Embeddings
==========================

HAKE and PairRE models, self-adversarial training and text checkpoints.

Usage:
    from tspkit.kge import create_kge_model, train_kge, save_kge

    model = train_kge(split.train, KgeTrainConfig(kind="hake", dim=200), valid=split.valid)
    save_kge(model, "output/kge_hake.ckpt")
    scores = model.score(h, r, t)
"""

from typing import Dict, List, Optional, Type

import torch

from .base import EPS, KgeModel
from .hake import HAKE
from .pairre import PairRE

KGE_MODELS: Dict[str, Type[KgeModel]] = {
    "hake": HAKE,
    "pairre": PairRE,
}


def get_kge_class(kind: str) -> Type[KgeModel]:
    """
    Raises:
        ValueError: If the model kind is unknown
    """
    if kind not in KGE_MODELS:
        raise ValueError(f"Unknown KGE model: {kind}. Available: {list(KGE_MODELS.keys())}")
    return KGE_MODELS[kind]


def list_kge_models() -> List[str]:
    return list(KGE_MODELS.keys())


def create_kge_model(
    kind: str,
    n_entities: int,
    n_relations: int,
    dim: int,
    lam: float = 0.5,
    alpha: float = 1.0,
    norm_p: int = 1,
    dtype: torch.dtype = torch.float64,
    generator: Optional[torch.Generator] = None
) -> KgeModel:
    cls = get_kge_class(kind)
    kwargs = dict(lam=lam, alpha=alpha, dtype=dtype, generator=generator)
    if cls is PairRE:
        kwargs["norm_p"] = norm_p
    return cls(n_entities, n_relations, dim, **kwargs)


def hake_score(model: HAKE, h, r, t) -> torch.Tensor:
    return model.score(h, r, t)


def pairre_score(model: PairRE, h, r, t) -> torch.Tensor:
    return model.score(h, r, t)


def infer_relation(model: KgeModel, h_repr, t_repr):
    return model.infer_relation(h_repr, t_repr)


def relation_attention_vector(model: KgeModel, h_repr, t_repr) -> torch.Tensor:
    return model.attention_repr(h_repr, t_repr, model.all_relations())


from .training import (  # noqa: E402
    TrainBatch,
    adversarial_loss,
    make_batch,
    negative_sample,
    sample_negative_batch,
    self_adversarial_loss,
    tail_mrr,
    train_kge,
)
from .checkpoint import load_kge, save_kge  # noqa: E402

__all__ = [
    'EPS',
    'KgeModel',
    'HAKE',
    'PairRE',
    'KGE_MODELS',
    'get_kge_class',
    'list_kge_models',
    'create_kge_model',
    'hake_score',
    'pairre_score',
    'infer_relation',
    'relation_attention_vector',
    'TrainBatch',
    'adversarial_loss',
    'make_batch',
    'negative_sample',
    'sample_negative_batch',
    'self_adversarial_loss',
    'tail_mrr',
    'train_kge',
    'load_kge',
    'save_kge',
]
