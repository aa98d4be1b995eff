"""
tspkit
======

Triple set prediction on knowledge graphs.

This package provides:
- Knowledge graph loading, splits and the CWA / RS-POWA metrics
- Subgraph partitioning of the candidate space
- HAKE and PairRE embeddings, the head-tail pair model and GPHT prediction
- RuleTensor-TSP and KGE-TSP baselines
- A family-tree dataset generator
- Async tasks behind the ``tspkit`` command line

Usage:
    from tspkit import load_run_config, run_pipeline, predict

    config = load_run_config(overrides={"out": "runs/family", "seed": 7})
    task = await run_pipeline(config)
    print(task.get_stats())

    # One method on an existing output directory
    task = await predict(config, "ruletensor")
"""

from .config import VERSION, RunConfig, load_run_config
from .kg import DatasetSplit, KnowledgeGraph, load_dataset, load_kg
from .metrics import EvaluationReport, evaluate
from .partition import PartitionResult, partition_best_of
from .pipeline import gpht_predict
from .prediction import PredictedTriple, PredictedTripleSet, read_predictions, write_predictions
from .task import EvaluateTask, PredictTask, RunPipelineTask

__version__ = VERSION


# Convenience functions
async def run_pipeline(config: RunConfig, store=None, progress: bool = True) -> RunPipelineTask:
    """
    Convenience function for the full run (datagen when ``config.dataset`` is
    unset, partition, both models, GPHT, evaluation under both assumptions).

    Returns:
        RunPipelineTask instance with results
    """
    task = RunPipelineTask(config, store=store)
    await task.run(progress=progress)
    return task


async def predict(config: RunConfig, method: str = "gpht", store=None, progress: bool = True) -> PredictTask:
    """
    Convenience function to run one prediction method against the artifacts in
    ``config.out``.

    Returns:
        PredictTask instance with results
    """
    task = PredictTask(config, method, store=store)
    await task.run(progress=progress)
    return task


async def evaluate_file(config: RunConfig, mode: str, predictions=None, store=None) -> EvaluateTask:
    """Convenience function to evaluate a prediction file; the report is on ``task.report``."""
    task = EvaluateTask(config, mode, predictions, store=store)
    await task.run(progress=True)
    return task


__all__ = [
    '__version__',
    'RunConfig',
    'load_run_config',
    'KnowledgeGraph',
    'DatasetSplit',
    'load_kg',
    'load_dataset',
    'EvaluationReport',
    'evaluate',
    'PartitionResult',
    'partition_best_of',
    'gpht_predict',
    'PredictedTriple',
    'PredictedTripleSet',
    'read_predictions',
    'write_predictions',
    'run_pipeline',
    'predict',
    'evaluate_file',
]
