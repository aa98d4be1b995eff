# Standard library modules.
import copy
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

# Third party modules.
import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger
from tqdm import tqdm

# Local modules.
from ..config import KgeTrainConfig
from ..errors import DivergenceError
from ..kg import KnowledgeGraph, Triple, as_triple_array
from .base import KgeModel

# Globals and constants variables.
SCORE_BUDGET = 2_000_000


@dataclass
class TrainBatch:
    """
    Positives with k corruptions each. ``mask`` marks corruptions that were
    found within the retry budget; ``weights`` is filled by the loss.
    """
    positives: torch.Tensor
    negatives: torch.Tensor
    mask: torch.Tensor
    weights: Optional[torch.Tensor] = None

    def __len__(self):
        return len(self.positives)


def sample_negative_batch(
    kg: KnowledgeGraph,
    positives,
    k: int,
    rng: np.random.Generator,
    max_retries: int = 100
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Corrupt head or tail (fair coin per slot) with uniform entities until the
    corruption is not a known triple.

    Returns:
        (negatives of shape (B, k, 3), found mask of shape (B, k))
    """
    positives = as_triple_array(positives)
    base = np.repeat(positives, k, axis=0)
    negatives = base.copy()
    replace_head = rng.random(len(base)) < 0.5
    pending = np.ones(len(base), dtype=bool)

    for _ in range(max_retries):
        slots = np.flatnonzero(pending)
        if len(slots) == 0:
            break
        candidates = base[slots].copy()
        entities = rng.integers(kg.n_entities, size=len(slots))
        heads = replace_head[slots]
        candidates[heads, 0] = entities[heads]
        candidates[~heads, 2] = entities[~heads]
        accepted = ~kg.contains_many(candidates)
        negatives[slots[accepted]] = candidates[accepted]
        pending[slots[accepted]] = False

    if pending.any():
        logger.warning(
            f"Negative sampling saturated: {int(pending.sum())} corruptions not found "
            f"after {max_retries} retries"
        )
    return negatives.reshape(len(positives), k, 3), (~pending).reshape(len(positives), k)


def negative_sample(
    kg: KnowledgeGraph,
    triple: Triple,
    k: int,
    rng: np.random.Generator,
    max_retries: int = 100
) -> List[Triple]:
    """Up to k corruptions of one triple (fewer when saturated)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    negatives, mask = sample_negative_batch(kg, [triple], k, rng, max_retries)
    return [tuple(t) for t in negatives[0][mask[0]].tolist()]


def make_batch(kg: KnowledgeGraph, positives, k: int, rng: np.random.Generator, max_retries: int = 100) -> TrainBatch:
    positives = as_triple_array(positives)
    negatives, mask = sample_negative_batch(kg, positives, k, rng, max_retries)
    return TrainBatch(
        positives=torch.as_tensor(positives, dtype=torch.long),
        negatives=torch.as_tensor(negatives, dtype=torch.long),
        mask=torch.as_tensor(mask, dtype=torch.bool),
    )


def adversarial_loss(
    model: KgeModel,
    batch: TrainBatch,
    alpha: Optional[float] = None,
    adversarial_grad: bool = False
) -> torch.Tensor:
    """
    Mean over positives of -log sigmoid(f(pos)) - sum_i p_i log sigmoid(-f(neg_i)),
    with p = softmax(alpha * f(neg)) over the found corruptions.
    """
    alpha = model.alpha if alpha is None else alpha
    positive_scores = model(batch.positives)
    negative_scores = model(batch.negatives)

    logits = (alpha * negative_scores).masked_fill(~batch.mask, float("-inf"))
    weights = torch.nan_to_num(torch.softmax(logits, dim=-1), nan=0.0)
    if not adversarial_grad:
        weights = weights.detach()
    batch.weights = weights.detach()

    negative_terms = (weights * F.logsigmoid(-negative_scores)).masked_fill(~batch.mask, 0.0)
    return -(F.logsigmoid(positive_scores) + negative_terms.sum(dim=-1)).mean()


def self_adversarial_loss(
    model: KgeModel,
    batch: TrainBatch,
    alpha: Optional[float] = None,
    adversarial_grad: bool = False
) -> Tuple[float, Dict[str, torch.Tensor]]:
    """Loss value and its gradient for every model parameter."""
    loss = adversarial_loss(model, batch, alpha, adversarial_grad)
    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    grads = torch.autograd.grad(loss, [p for _, p in named], allow_unused=True)
    gradients = {
        name: torch.zeros_like(p) if g is None else g
        for (name, p), g in zip(named, grads)
    }
    return float(loss.detach()), gradients


@torch.no_grad()
def tail_mrr(model: KgeModel, triples) -> float:
    """Raw mean reciprocal rank of the true tail among all entities."""
    triples = torch.as_tensor(as_triple_array(triples), dtype=torch.long)
    if len(triples) == 0:
        return 0.0
    all_entities = torch.arange(model.n_entities)
    chunk = max(1, SCORE_BUDGET // max(1, model.n_entities * model.dim))
    reciprocal = []
    for start in range(0, len(triples), chunk):
        block = triples[start:start + chunk]
        scores = model.score(block[:, 0:1], block[:, 1:2], all_entities[None, :])
        true_scores = scores.gather(1, block[:, 2:3])
        ranks = 1 + (scores > true_scores).sum(dim=1)
        reciprocal.append(1.0 / ranks.to(torch.float64))
    return float(torch.cat(reciprocal).mean())


def train_kge(kg: KnowledgeGraph, config: KgeTrainConfig, valid=None) -> KgeModel:
    """
    Self-adversarial training with Adam (or SGD), learning-rate decay on plateaus
    and best-by-valid checkpoint selection. Deterministic given ``config.seed``.

    Args:
        kg: Training graph
        config: Hyperparameters
        valid: Optional validation triples used for model selection

    Returns:
        Trained model with the per-epoch loss curve in ``model.history``

    Raises:
        DivergenceError: If the loss becomes non-finite
    """
    from . import create_kge_model

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    model = create_kge_model(
        config.kind, kg.n_entities, kg.n_relations, config.dim,
        lam=config.lam, alpha=config.alpha, norm_p=config.norm_p, generator=generator
    )
    if config.optimizer == "adam":
        optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    else:
        optimizer = torch.optim.SGD(model.parameters(), lr=config.lr)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, mode="min", factor=config.decay_factor, patience=config.decay_patience
    )

    valid = None if valid is None else as_triple_array(valid)[:config.valid_limit]
    positives = kg.triples
    best_mrr, best_state = -1.0, None
    history = []

    logger.info(
        f"Training {config.kind} (dim={config.dim}, lr={config.lr}) on {len(positives)} triples "
        f"for {config.epochs} epochs"
    )
    epochs = tqdm(range(1, config.epochs + 1), desc=config.kind, disable=not config.progress)
    for epoch in epochs:
        model.train()
        order = rng.permutation(len(positives))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = make_batch(
                kg, positives[order[start:start + config.batch_size]],
                config.negatives, rng, config.max_retries
            )
            optimizer.zero_grad()
            loss = adversarial_loss(model, batch, config.alpha, config.adversarial_grad)
            if not torch.isfinite(loss):
                raise DivergenceError(
                    epoch, float(loss), f"lr={optimizer.param_groups[0]['lr']:.3g}, batch at {start}"
                )
            loss.backward()
            optimizer.step()
            model.after_step()
            total += float(loss) * len(batch)
            count += len(batch)

        epoch_loss = total / max(1, count)
        history.append(epoch_loss)
        scheduler.step(epoch_loss)

        if valid is not None and len(valid) and (epoch % config.eval_every == 0 or epoch == config.epochs):
            model.eval()
            mrr = tail_mrr(model, valid)
            logger.debug(f"epoch {epoch}: loss={epoch_loss:.4f} valid MRR={mrr:.4f}")
            if mrr > best_mrr:
                best_mrr, best_state = mrr, copy.deepcopy(model.state_dict())

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    model.history = history
    logger.success(
        f"✓ Trained {config.kind}: final loss {history[-1]:.4f}"
        + (f", best valid MRR {best_mrr:.4f}" if best_state is not None else "")
    )
    return model
