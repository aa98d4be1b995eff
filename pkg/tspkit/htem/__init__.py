"""
Head-Tail Entity Modeling
=========================

Relational encoder over subgraph support triples, attention pair decoder,
episodic training over a partition and unconnected-pair prediction.

Usage:
    from tspkit.htem import train_htem, predict_pairs, save_htem

    model = train_htem(partition, HtemTrainConfig(kind="hake"), valid=split.valid)
    pairs = predict_pairs(model, partition.subgraphs[0], theta_ht=0.3)
"""

from .checkpoint import load_htem, save_htem
from .episode import (
    SubgraphEpisode,
    augmented_edges,
    full_episode,
    make_episode,
    sample_negative_pairs,
    unconnected_pairs,
)
from .model import (
    CompGcnEncoder,
    HtemModel,
    compgcn_forward,
    entity_attention,
    episode_loss,
    pair_score,
)
from .predict import predict_pairs, score_unconnected_pairs
from .training import held_out_pairs, htem_loss, pair_separation, train_htem

__all__ = [
    'SubgraphEpisode',
    'augmented_edges',
    'full_episode',
    'make_episode',
    'sample_negative_pairs',
    'unconnected_pairs',
    'CompGcnEncoder',
    'HtemModel',
    'compgcn_forward',
    'entity_attention',
    'episode_loss',
    'pair_score',
    'predict_pairs',
    'score_unconnected_pairs',
    'held_out_pairs',
    'htem_loss',
    'pair_separation',
    'train_htem',
    'load_htem',
    'save_htem',
]
