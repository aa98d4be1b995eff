"""
Task Package
============

Async tasks, one per subcommand, plus the full-run task.

Available tasks:
- Task: Abstract base class
- CommandTask: One subcommand writing an artifact and a run manifest
- DatagenTask, PartitionTask, TrainKgeTask, TrainHtemTask
- PredictTask, EvaluateTask, SweepTask
- RunPipelineTask: Every step of ``tspkit run`` in order
"""

from .base import ArtifactLayout, CommandTask, Task, resolve_dataset
from .data import DatagenTask, PartitionTask
from .pipeline import RunPipelineTask
from .predict import METHODS, EvaluateTask, PredictTask
from .sweep import PARAMETERS, SweepTask, default_values
from .training import TrainHtemTask, TrainKgeTask

__all__ = [
    'Task',
    'CommandTask',
    'ArtifactLayout',
    'resolve_dataset',
    'DatagenTask',
    'PartitionTask',
    'TrainKgeTask',
    'TrainHtemTask',
    'PredictTask',
    'EvaluateTask',
    'SweepTask',
    'RunPipelineTask',
    'METHODS',
    'PARAMETERS',
    'default_values',
]
