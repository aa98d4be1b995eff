"""
Threshold Sweeps
================

``tspkit sweep {theta-hrt,theta-ht,theta-kge}``: predict at each threshold value
and evaluate under both assumptions. Results go to ``sweep_<parameter>.csv`` and
``sweep_<parameter>.json``; the models are loaded once and head-tail pair scores
are computed once per sweep.

Usage:
    task = SweepTask(config, "theta-hrt", values=[5, 1, 0.5])
    await task.run()
    print(task.table)
"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from ..baselines import kge_tsp_predict
from ..config import SWEEP_VALUES, Assumption
from ..metrics import evaluate
from ..partition import load_partition
from ..pipeline import collect_pairs, gpht_predict
from ..prediction import PredictedTripleSet
from .predict import PredictTask

PARAMETERS = tuple(SWEEP_VALUES)


def default_values(parameter: str, model: str) -> List[float]:
    if parameter not in SWEEP_VALUES:
        raise ValueError(f"Unknown sweep parameter: {parameter}. Available: {list(PARAMETERS)}")
    values = SWEEP_VALUES[parameter]
    if isinstance(values, dict):
        values = values[model]
    return [float(v) for v in values]


class SweepTask(PredictTask):

    def __init__(self, config, parameter: str, values: Optional[Sequence[float]] = None, store=None):
        method = "kgetsp" if parameter == "theta-kge" else "gpht"
        super().__init__(config, method, store=store)
        self.values = [float(v) for v in values] if values else default_values(parameter, config.model)
        self.parameter = parameter
        self.table: Optional[pd.DataFrame] = None

    @property
    def command(self) -> str:
        return f"sweep-{self.parameter}"

    def predictors(self, kg) -> Callable[[float], PredictedTripleSet]:
        kge = self.load_kge_model(kg)
        if self.parameter == "theta-kge":
            return lambda value: kge_tsp_predict(kg, kge, value, self.config.threads)

        partition = load_partition(self.layout.partition_dir, kg)
        htem = self.load_htem_model(kg)
        floor = min(self.values) if self.parameter == "theta-ht" else self.config.theta_ht
        pairs = collect_pairs(partition, htem, floor, self.config.progress)

        def predict(value: float) -> PredictedTripleSet:
            theta_ht = value if self.parameter == "theta-ht" else self.config.theta_ht
            theta_hrt = value if self.parameter == "theta-hrt" else self.config.theta_hrt
            return gpht_predict(
                kg, partition, htem, kge, theta_ht, theta_hrt,
                normalization=self.config.normalization, pairs=pairs,
            )

        return predict

    def execute(self) -> Path:
        split = self.load_split()
        kg = self.training_graph()
        predict = self.predictors(kg)

        rows: List[Dict[str, float]] = []
        for value in self.values:
            predicted = predict(value)
            row = {"parameter": self.parameter, "value": value, "n_predict": len(predicted)}
            for mode in Assumption:
                report = evaluate(predicted, split, self.config.assumption(mode))
                for metric in ("jprecision", "strecall", "f_tsp", "rs_tsp"):
                    row[f"{mode.value}_{metric}"] = getattr(report, metric)
            rows.append(row)
            logger.info(f"  {self.parameter}={value:g}: {len(predicted)} triples, CWA F_TSP={row['cwa_f_tsp']:.4f}")

        self.table = pd.DataFrame(rows)
        csv_path, json_path = self.layout.sweep(self.parameter)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        self.table.to_csv(csv_path, index=False, lineterminator="\n")
        self.table.to_json(json_path, orient="records", indent=2)
        self.record("json", json_path)
        self.details.update({"values": self.values, "rows": len(rows)})
        return self.record("csv", csv_path)
