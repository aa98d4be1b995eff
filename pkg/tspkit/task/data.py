"""
Data Tasks
==========

``tspkit datagen`` and ``tspkit partition``.

Usage:
    from tspkit.task.data import DatagenTask, PartitionTask

    await DatagenTask(config).run()
    await PartitionTask(config, store=store).run()
"""

from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from ..datagen import generate_family_kg, split_dataset, write_dataset
from ..kg import dataset_statistics
from ..partition import partition_best_of, save_partition
from .base import CommandTask


class DatagenTask(CommandTask):
    """Generate a family dataset; ``directory`` defaults to the output directory."""

    command = "datagen"

    def __init__(self, config, store=None, directory: Optional[Path] = None):
        super().__init__(config, store=store)
        self.directory = Path(directory) if directory else self.layout.out

    def execute(self) -> Path:
        seed = self.config.module_seed("datagen")
        rng = np.random.default_rng(seed)
        kg = generate_family_kg(self.config.n_people, self.config.n_families, rng)
        split = split_dataset(kg, self.config.split_ratios(), rng)

        directory = write_dataset(split, self.directory, manifest={
            "seed": self.config.seed,
            "module_seed": seed,
            "n_people": self.config.n_people,
            "n_families": self.config.n_families,
        })
        self.details["sizes"] = dataset_statistics(split)
        for name in ("train.txt", "valid.txt", "test.txt", "generation.json"):
            self.record(name.split(".")[0], directory / name)
        return directory


class PartitionTask(CommandTask):
    """Partition the training graph and write the subgraph directory."""

    command = "partition"

    def execute(self) -> Path:
        kg = self.training_graph()
        result = partition_best_of(kg, self.config.partition_params())
        directory = save_partition(result, kg, self.layout.partition_dir)

        self.details.update({
            "subgraphs": len(result.subgraphs),
            "candidate_space": result.candidate_space,
            "full_candidate_space": result.full_candidate_space,
            "remaining_fraction": result.remaining_fraction,
        })
        if len(result.stats):
            logger.debug(f"Subgraph statistics:\n{result.stats.describe().to_string()}")
        return self.record("partition", directory)
