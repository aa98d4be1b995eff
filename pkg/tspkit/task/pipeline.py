"""
Full Run Task
=============

``tspkit run``: datagen (when no dataset is given) -> partition -> train kge ->
train htem -> predict gpht -> evaluate cwa and powa.

Usage:
    from tspkit.task.pipeline import RunPipelineTask

    task = RunPipelineTask(config, store=ChainStore(MemoryStore(), JsonStore(config.out)))
    ok = await task.run()
"""

from typing import Dict, List, Optional

from loguru import logger

from ..config import Assumption, RunConfig
from .base import ArtifactLayout, CommandTask, Task
from .data import DatagenTask, PartitionTask
from .predict import EvaluateTask, PredictTask
from .training import TrainHtemTask, TrainKgeTask


class RunPipelineTask(Task):
    """
    Runs the steps in order and stops at the first failure, since every step
    reads what the previous one wrote.
    """

    def __init__(self, config: RunConfig, store=None):
        super().__init__(store=store)
        layout = ArtifactLayout(config.out)
        self.generate = config.dataset is None
        if self.generate:
            config = config.model_copy(update={"dataset": layout.dataset_dir})
        self.config = config
        self.layout = layout

        # State
        self.tasks: List[CommandTask] = []
        self.results: Dict[str, dict] = {}
        self.error: Optional[BaseException] = None

    @property
    def name(self) -> str:
        return "run"

    def build_tasks(self) -> List[CommandTask]:
        tasks: List[CommandTask] = []
        if self.generate:
            tasks.append(DatagenTask(self.config, store=self.store, directory=self.layout.dataset_dir))
        tasks += [
            PartitionTask(self.config, store=self.store),
            TrainKgeTask(self.config, store=self.store),
            TrainHtemTask(self.config, store=self.store),
            PredictTask(self.config, "gpht", store=self.store),
        ]
        predictions = self.layout.predictions("gpht")
        tasks += [EvaluateTask(self.config, mode, predictions, store=self.store) for mode in Assumption]
        return tasks

    async def run(self, progress: bool = True) -> bool:
        """
        Args:
            progress: Show progress messages and the final summary

        Returns:
            True if every step succeeded
        """
        if progress:
            logger.info(f"Starting full run into {self.layout.out}")

        self.tasks = self.build_tasks()
        success = True
        for task in self.tasks:
            if not await task.run(progress=progress):
                success = False
                self.error = task.error
                logger.warning(f"Stopping after {task.name} failure")
                break

        self.results = {task.name: task.get_stats() for task in self.tasks if task.artifact or task.error}

        if progress:
            self._print_summary()

        return success

    def _print_summary(self):
        logger.info("\n" + "=" * 70)
        logger.info("Run Summary")
        logger.info("=" * 70)

        for name, stats in self.results.items():
            status = "✗" if stats['error'] else "✓"
            seconds = stats['seconds']
            logger.info(f"\n{status} {name}:")
            if stats['artifact']:
                logger.info(f"  Artifact: {stats['artifact']}")
            if seconds is not None:
                logger.info(f"  Seconds: {seconds:.1f}")
            if stats['error']:
                logger.info(f"  Error: {stats['error']}")
            report = stats.get('report')
            if report:
                logger.info(
                    f"  JPrecision={report['jprecision']:.4f} STRecall={report['strecall']:.4f} "
                    f"F_TSP={report['f_tsp']:.4f} RS_TSP={report['rs_tsp']:.4f}"
                )

        logger.info("\n" + "-" * 70)
        logger.info(f"Steps completed: {sum(1 for s in self.results.values() if not s['error'])}/{len(self.tasks)}")
        logger.info("=" * 70 + "\n")

    def get_stats(self) -> dict:
        return {
            'steps': [task.name for task in self.tasks],
            'completed': [name for name, s in self.results.items() if not s['error']],
            'individual_stats': self.results,
        }
