# Standard library modules.
from typing import Dict, Tuple

# Third party modules.
import numpy as np
import torch

# Local modules.
from ..partition import Subgraph
from .episode import full_episode, unconnected_pairs
from .model import HtemModel

# Globals and constants variables.
PAIR_CHUNK = 65536

Pair = Tuple[int, int]


@torch.no_grad()
def score_unconnected_pairs(model: HtemModel, subgraph: Subgraph) -> Tuple[np.ndarray, np.ndarray]:
    """
    Score every unconnected ordered pair of a subgraph.

    Returns:
        (global (head, tail) pairs, y scores), pairs in row-major local order
    """
    pairs = unconnected_pairs(subgraph)
    if len(pairs) == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0)
    was_training = model.training
    model.eval()
    reps, relation_reps = model.encode(full_episode(subgraph, model.n_relations))
    local = torch.as_tensor(pairs)
    scores = torch.cat([
        model.pair_probabilities(reps, relation_reps, local[start:start + PAIR_CHUNK])
        for start in range(0, len(local), PAIR_CHUNK)
    ]).numpy()
    model.train(was_training)
    return subgraph.entities[pairs], scores


def predict_pairs(model: HtemModel, subgraph: Subgraph, theta_ht: float) -> Dict[Pair, float]:
    """Unconnected pairs (global ids) whose pair score exceeds ``theta_ht``."""
    pairs, scores = score_unconnected_pairs(model, subgraph)
    keep = scores > theta_ht
    return {
        (int(h), int(t)): float(y)
        for (h, t), y in zip(pairs[keep].tolist(), scores[keep].tolist())
    }
