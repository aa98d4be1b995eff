# Standard library modules.
from pathlib import Path
from typing import Union

# Third party modules.
import torch
from loguru import logger

# Local modules.
from ..checkpoint import read_matrix, write_matrix
from ..errors import MissingArtifactError
from .base import KgeModel

# Globals and constants variables.
PAIRRE_L2_KIND = "pairre_l2"


def checkpoint_kind(model: KgeModel) -> str:
    if model.kind == "pairre" and getattr(model, "norm_p", 1) == 2:
        return PAIRRE_L2_KIND
    return model.kind


def save_kge(model: KgeModel, path: Union[str, Path]) -> Path:
    """Write a text checkpoint (see ``tspkit.checkpoint`` for the layout)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(
            f"{checkpoint_kind(model)} {model.dim} {model.n_entities} {model.n_relations} "
            f"{model.lam!r} {model.alpha!r}\n"
        )
        write_matrix(handle, model.entity_rows())
        write_matrix(handle, model.relation_rows())
    logger.debug(f"Saved {model.kind} checkpoint to {path}")
    return path


def load_kge(path: Union[str, Path]) -> KgeModel:
    """
    Rebuild a model from a text checkpoint.

    Raises:
        MissingArtifactError: If the file does not exist
    """
    from . import create_kge_model

    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(path, "run `tspkit train kge` first")

    with open(path, encoding="utf-8") as handle:
        lines = iter(handle)
        kind, dim, n_entities, n_relations, lam, alpha = next(lines).split()
        dim, n_entities, n_relations = int(dim), int(n_entities), int(n_relations)
        norm_p = 2 if kind == PAIRRE_L2_KIND else 1
        kind = "pairre" if kind == PAIRRE_L2_KIND else kind

        model = create_kge_model(
            kind, n_entities, n_relations, dim, lam=float(lam), alpha=float(alpha), norm_p=norm_p
        )
        entity_rows = read_matrix(lines, n_entities, dim * model.entity_parts)
        relation_rows = read_matrix(lines, n_relations, dim * model.relation_parts)

    model.load_rows(
        torch.as_tensor(entity_rows, dtype=model.dtype),
        torch.as_tensor(relation_rows, dtype=model.dtype),
    )
    return model
