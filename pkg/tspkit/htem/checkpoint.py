# Standard library modules.
from pathlib import Path
from typing import Union

# Third party modules.
import torch
from loguru import logger

# Local modules.
from ..checkpoint import read_sections, write_sections
from ..config import HtemTrainConfig
from ..errors import MissingArtifactError
from .model import HtemModel

# Globals and constants variables.
HEADER_TAG = "htem"


def save_htem(model: HtemModel, path: Union[str, Path]) -> Path:
    """
    Header ``htem <n_entities> <n_relations> <config json>`` followed by one
    section per state tensor.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{HEADER_TAG} {model.n_entities} {model.n_relations} {model.config.model_dump_json()}\n")
        write_sections(handle, model.state_dict())
    logger.debug(f"Saved HTEM checkpoint to {path}")
    return path


def load_htem(path: Union[str, Path]) -> HtemModel:
    """
    Raises:
        MissingArtifactError: If the file does not exist
        ValueError: If the file is not an HTEM checkpoint
    """
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(path, "run `tspkit train htem` first")
    with open(path, encoding="utf-8") as handle:
        lines = iter(handle)
        tag, n_entities, n_relations, config_json = next(lines).rstrip("\n").split(" ", 3)
        if tag != HEADER_TAG:
            raise ValueError(f"{path} is not an HTEM checkpoint (header {tag!r})")
        config = HtemTrainConfig.model_validate_json(config_json)
        model = HtemModel(int(n_entities), int(n_relations), config)
        sections = read_sections(lines)

    state = {name: torch.as_tensor(values, dtype=torch.float64) for name, values in sections.items()}
    model.load_state_dict(state)
    model.eval()
    return model
