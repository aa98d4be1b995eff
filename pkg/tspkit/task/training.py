"""
Training Tasks
==============

``tspkit train kge`` and ``tspkit train htem``.
"""

from pathlib import Path

from ..htem import save_htem, train_htem
from ..kge import save_kge, train_kge
from ..partition import load_partition
from .base import CommandTask


class TrainKgeTask(CommandTask):

    command = "train-kge"

    def execute(self) -> Path:
        kg = self.training_graph()
        config = self.config.kge_config()
        model = train_kge(kg, config, valid=self.validation_triples())

        history = getattr(model, "history", [])
        self.details.update({
            "kind": config.kind,
            "epochs": len(history),
            "final_loss": history[-1] if history else None,
            "module_seed": config.seed,
        })
        return self.record("checkpoint", save_kge(model, self.layout.kge_checkpoint(config.kind)))


class TrainHtemTask(CommandTask):
    """Train the head-tail model on the saved partition."""

    command = "train-htem"

    def execute(self) -> Path:
        kg = self.training_graph()
        partition = load_partition(self.layout.partition_dir, kg)
        config = self.config.htem_config()
        model = train_htem(partition, config, valid=self.validation_triples())

        history = getattr(model, "history", [])
        self.details.update({
            "kind": config.kind,
            "passes": len(history),
            "final_loss": history[-1] if history else None,
            "entity_attention": config.entity_attention,
            "relation_attention": config.relation_attention,
            "module_seed": config.seed,
        })
        return self.record("checkpoint", save_htem(model, self.layout.htem_checkpoint(config.kind)))
