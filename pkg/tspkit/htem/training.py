# Standard library modules.
import copy
import math
from typing import Dict, List, Optional, Sequence, Tuple

# Third party modules.
import numpy as np
import torch
from loguru import logger
from tqdm import tqdm

# Local modules.
from ..config import HtemTrainConfig
from ..errors import DivergenceError
from ..kg import as_triple_array
from ..partition import PartitionResult, Subgraph
from .episode import SubgraphEpisode, full_episode, local_triples, make_episode, sample_negative_pairs
from .model import HtemModel, episode_loss

# Globals and constants variables.
MIN_EPISODE_TRIPLES = 2


def htem_loss(
    model: HtemModel,
    episode: SubgraphEpisode,
    kge_weight: float = 1.0
) -> Tuple[Optional[float], Dict[str, torch.Tensor]]:
    """
    Episode loss and its gradient for every model parameter.

    Returns:
        (loss, gradients); (None, {}) when the episode has no query pairs
    """
    if len(episode.positive_pairs) == 0:
        logger.warning(f"Skipping subgraph {episode.subgraph_index}: empty query set")
        return None, {}
    loss = episode_loss(model, episode, kge_weight)
    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    grads = torch.autograd.grad(loss, [p for _, p in named], allow_unused=True)
    gradients = {
        name: torch.zeros_like(p) if g is None else g
        for (name, p), g in zip(named, grads)
    }
    return float(loss.detach()), gradients


def held_out_pairs(subgraphs: Sequence[Subgraph], triples) -> Dict[int, np.ndarray]:
    """Local (head, tail) pairs of ``triples`` falling inside each subgraph and unconnected there."""
    triples = as_triple_array(triples)
    held: Dict[int, np.ndarray] = {}
    for subgraph in subgraphs:
        inside = np.isin(triples[:, 0], subgraph.entities) & np.isin(triples[:, 2], subgraph.entities)
        if not inside.any():
            continue
        pairs = np.unique(triples[inside][:, [0, 2]], axis=0)
        pairs = np.searchsorted(subgraph.entities, pairs)
        n = subgraph.n_entities
        known = local_triples(subgraph)
        connected = np.isin(pairs[:, 0] * n + pairs[:, 1], known[:, 0] * n + known[:, 2])
        pairs = pairs[~connected & (pairs[:, 0] != pairs[:, 1])]
        if len(pairs):
            held[subgraph.index] = pairs
    return held


@torch.no_grad()
def pair_separation(
    model: HtemModel,
    subgraphs: Sequence[Subgraph],
    held: Dict[int, np.ndarray],
    seed: int = 0
) -> float:
    """Mean y over held-out pairs minus mean y over as many random unconnected pairs."""
    was_training = model.training
    model.eval()
    rng = np.random.default_rng(seed)
    positive, negative = [], []
    for subgraph in subgraphs:
        pairs = held.get(subgraph.index)
        if pairs is None:
            continue
        episode = full_episode(subgraph, model.n_relations)
        reps, relation_reps = model.encode(episode)
        positive.append(model.pair_probabilities(reps, relation_reps, torch.as_tensor(pairs)))
        random_pairs = sample_negative_pairs(local_triples(subgraph), subgraph.n_entities, len(pairs), rng)
        if len(random_pairs):
            negative.append(model.pair_probabilities(reps, relation_reps, torch.as_tensor(random_pairs)))
    model.train(was_training)
    if not positive or not negative:
        return math.nan
    return float(torch.cat(positive).mean() - torch.cat(negative).mean())


def train_htem(
    partition: PartitionResult,
    config: HtemTrainConfig,
    valid=None,
    kge_weight: float = 1.0
) -> HtemModel:
    """
    Episodic training: every pass visits the subgraphs in shuffled order, drawing a
    fresh support/query split and fresh negatives each time. With ``valid`` triples
    the state with the best pair separation is kept.

    Args:
        partition: Partition of the training graph
        config: Hyperparameters
        valid: Optional validation triples (global ids)
        kge_weight: Weight of the embedding-model term

    Returns:
        Trained model in eval mode, per-pass loss sums in ``model.history``

    Raises:
        DivergenceError: If an episode loss becomes non-finite
    """
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = HtemModel(partition.n_entities, partition.n_relations, config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)

    subgraphs = [s for s in partition.subgraphs if s.n_triples >= MIN_EPISODE_TRIPLES]
    history: List[float] = []
    model.history = history
    if not subgraphs:
        logger.warning("No subgraph has enough triples for an episode; HTEM left untrained")
        model.eval()
        return model

    held = held_out_pairs(subgraphs, valid) if valid is not None else {}
    best_separation, best_state = -math.inf, None
    logger.info(
        f"Training HTEM ({config.kind}, dim={config.dim}) on {len(subgraphs)} subgraphs "
        f"for {config.passes} passes"
    )

    passes = tqdm(range(1, config.passes + 1), desc="htem", disable=not config.progress)
    for step in passes:
        model.train()
        total = 0.0
        for index in rng.permutation(len(subgraphs)).tolist():
            episode = make_episode(
                subgraphs[index], partition.n_relations, rng,
                config.query_fraction, config.negative_ratio
            )
            if len(episode.positive_pairs) == 0:
                logger.warning(f"Skipping subgraph {episode.subgraph_index}: empty query set")
                continue
            optimizer.zero_grad()
            loss = episode_loss(model, episode, kge_weight)
            if not torch.isfinite(loss):
                raise DivergenceError(step, float(loss), f"subgraph {episode.subgraph_index}")
            loss.backward()
            optimizer.step()
            total += float(loss)
        history.append(total)

        if held and (step % config.eval_every == 0 or step == config.passes):
            separation = pair_separation(model, subgraphs, held, config.seed)
            logger.debug(f"pass {step}: loss={total:.4f} separation={separation:.4f}")
            if separation > best_separation:
                best_separation, best_state = separation, copy.deepcopy(model.state_dict())

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    logger.success(
        f"✓ Trained HTEM: final loss {history[-1]:.4f}"
        + (f", best separation {best_separation:.4f}" if best_state is not None else "")
    )
    return model
