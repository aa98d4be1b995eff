"""
Prediction Tasks
================

``tspkit predict {gpht,ruletensor,kgetsp}`` and ``tspkit evaluate {cwa,powa}``.

Usage:
    from tspkit.task.predict import PredictTask, EvaluateTask

    task = PredictTask(config, "gpht", store=store)
    if await task.run():
        await EvaluateTask(config, "cwa", task.artifact, store=store).run()
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..baselines import kge_tsp_predict, ruletensor_predict, save_rules
from ..config import Assumption
from ..errors import MissingArtifactError
from ..htem import load_htem
from ..kge import load_kge
from ..metrics import evaluate
from ..partition import load_partition
from ..pipeline import gpht_predict, reduction_report
from ..prediction import PredictedTripleSet, read_predictions, write_predictions
from ..store.jsonfile import JsonStore
from ..store.records import EvaluationRecord
from .base import CommandTask

METHODS = ("gpht", "ruletensor", "kgetsp")


def check_method(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"Unknown prediction method: {method}. Available: {list(METHODS)}")
    return method


class PredictTask(CommandTask):
    """Run one prediction method and write its TSV file."""

    def __init__(self, config, method: str, store=None):
        super().__init__(config, store=store)
        self.method = check_method(method)

    @property
    def command(self) -> str:
        return f"predict-{self.method}"

    def load_kge_model(self, kg):
        path = self.layout.kge_checkpoint(self.config.model)
        model = load_kge(path)
        self.check_vocabulary(model, kg, path)
        return model

    def load_htem_model(self, kg):
        path = self.layout.htem_checkpoint(self.config.model)
        model = load_htem(path)
        self.check_vocabulary(model, kg, path)
        return model

    def predict_gpht(self, kg) -> PredictedTripleSet:
        partition = load_partition(self.layout.partition_dir, kg)
        predicted = gpht_predict(
            kg, partition, self.load_htem_model(kg), self.load_kge_model(kg),
            theta_ht=self.config.theta_ht,
            theta_hrt=self.config.theta_hrt,
            normalization=self.config.normalization,
            progress=self.config.progress,
        )
        self.details["reduction"] = reduction_report(predicted)
        return predicted

    def predict_ruletensor(self, kg) -> PredictedTripleSet:
        seed = self.config.module_seed("rules")
        predicted, rules = ruletensor_predict(
            kg,
            max_length=self.config.rule_length,
            n_walks=self.config.rule_walks,
            theta_conf=self.config.theta_conf,
            theta_hc=self.config.theta_hc,
            max_iter=self.config.max_iter,
            stop_ratio=self.config.stop_ratio,
            drop_reflexive=self.config.drop_reflexive,
            rng=np.random.default_rng(seed),
            threads=self.config.threads,
        )
        self.record("rules", save_rules(self.layout.rules, rules, kg))
        self.details["module_seed"] = seed
        return predicted

    def predict_kgetsp(self, kg) -> PredictedTripleSet:
        return kge_tsp_predict(kg, self.load_kge_model(kg), self.config.theta_kge, self.config.threads)

    def execute(self) -> Path:
        kg = self.training_graph()
        predicted = getattr(self, f"predict_{self.method}")(kg)
        self.details.update({
            "predicted": len(predicted),
            "thresholds": dict(predicted.thresholds),
            "staged_counts": dict(predicted.staged_counts),
            "metadata": dict(predicted.metadata),
        })
        seconds = predicted.metadata.get("seconds")
        if isinstance(seconds, dict):
            self.timings.update(seconds)
        return self.record("predictions", write_predictions(self.layout.predictions(self.method), predicted, kg))


class EvaluateTask(CommandTask):
    """Score a prediction file against the test split; writes ``evaluation_<stem>_<mode>.json``."""

    def __init__(self, config, mode: Union[str, Assumption], predictions: Optional[Path] = None, store=None):
        super().__init__(config, store=store)
        self.mode = Assumption(mode)
        self.predictions = Path(predictions) if predictions else self.layout.predictions("gpht")
        self.report = None

    @property
    def command(self) -> str:
        return f"evaluate-{self.mode.value}-{self.predictions.stem}"

    def execute(self) -> Path:
        split = self.load_split()
        if not self.predictions.is_file():
            raise MissingArtifactError(self.predictions, "run `tspkit predict` first or pass --predictions")
        predicted = read_predictions(self.predictions, split.train)
        self.report = evaluate(predicted, split, self.config.assumption(self.mode))

        record = EvaluationRecord(
            key_prediction=str(self.predictions),
            key_assumption=self.mode.value,
            report=self.report.model_dump(mode="json"),
        )
        writer = JsonStore(self.layout.out)
        writer.add(record, check_exists=False)
        self.details["report"] = record.report
        self.record("predictions", self.predictions)
        return self.record("evaluation", writer.path_for(record))
