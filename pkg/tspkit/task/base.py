__all__ = ['Task', 'CommandTask', 'ArtifactLayout', 'resolve_dataset']

# Standard library modules.
import abc
import asyncio
import time
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

# Third party modules.
from loguru import logger

# Local modules.
from ..config import VERSION, RunConfig
from ..errors import MissingArtifactError, TspkitError
from ..kg import DatasetSplit, KnowledgeGraph, load_dataset
from ..store.passthrough import PassThroughStore
from ..store.records import RunManifest

# Globals and constants variables.
DATASET_HINT = "pass --dataset or run `tspkit datagen` first"


class ArtifactLayout:
    """File names of every artifact under one output directory."""

    def __init__(self, out):
        self.out = Path(out)

    @property
    def dataset_dir(self) -> Path:
        return self.out / "dataset"

    @property
    def partition_dir(self) -> Path:
        return self.out / "partition"

    @property
    def rules(self) -> Path:
        return self.out / "rules.tsv"

    def kge_checkpoint(self, kind: str) -> Path:
        return self.out / f"kge_{kind}.ckpt"

    def htem_checkpoint(self, kind: str) -> Path:
        return self.out / f"htem_{kind}.ckpt"

    def predictions(self, method: str) -> Path:
        return self.out / f"predictions_{method}.tsv"

    def sweep(self, parameter: str) -> Tuple[Path, Path]:
        stem = self.out / f"sweep_{parameter}"
        return stem.with_suffix(".csv"), stem.with_suffix(".json")

    def relative(self, path: Path) -> str:
        try:
            return str(Path(path).relative_to(self.out))
        except ValueError:
            return str(path)


def resolve_dataset(config: RunConfig) -> Path:
    """
    Dataset directory of a run: ``--dataset`` or the one ``tspkit run`` generated.

    Raises:
        MissingArtifactError: If neither holds a train.txt
    """
    directory = Path(config.dataset) if config.dataset else ArtifactLayout(config.out).dataset_dir
    if not (directory / "train.txt").is_file():
        raise MissingArtifactError(directory / "train.txt", DATASET_HINT)
    return directory


class Task(metaclass=abc.ABCMeta):

    def __init__(self, store=None):
        if store is None:
            store = PassThroughStore()
        self.store = store

    @abc.abstractmethod
    async def run(self, progress=True):
        """
        Executes the task
        Returns ``True`` if the task succeeded, ``False`` otherwise.
        """
        raise NotImplementedError

    @property
    @abc.abstractmethod
    def name(self):
        raise NotImplementedError


class CommandTask(Task):
    """
    One subcommand: blocking work in a worker thread, then a run manifest in the store.

    Subclasses implement ``execute`` returning the main artifact path and fill
    ``self.details`` / ``self.artifacts`` on the way.
    """

    command = "command"

    def __init__(self, config: RunConfig, store=None):
        super().__init__(store=store)
        self.config = config
        self.layout = ArtifactLayout(config.out)
        self.details: Dict[str, Any] = {}
        self.artifacts: Dict[str, str] = {}
        self.timings: Dict[str, float] = {}
        self.artifact: Optional[Path] = None
        self.error: Optional[BaseException] = None
        self._split: Optional[DatasetSplit] = None

    @property
    def name(self) -> str:
        return self.command

    @abc.abstractmethod
    def execute(self) -> Path:
        raise NotImplementedError

    def load_split(self) -> DatasetSplit:
        if self._split is None:
            started = time.perf_counter()
            self._split = load_dataset(resolve_dataset(self.config))
            self.timings["load"] = time.perf_counter() - started
        return self._split

    def training_graph(self) -> KnowledgeGraph:
        return self.load_split().training_graph(include_valid=self.config.use_valid)

    def validation_triples(self):
        """Valid triples for model selection, unless they joined training."""
        return None if self.config.use_valid else self.load_split().valid

    def record(self, role: str, path: Path) -> Path:
        self.artifacts[role] = self.layout.relative(path)
        return path

    def check_vocabulary(self, model, kg: KnowledgeGraph, path: Path):
        if (model.n_entities, model.n_relations) != (kg.n_entities, kg.n_relations):
            raise TspkitError(
                f"{path} was trained on {model.n_entities} entities / {model.n_relations} relations, "
                f"the dataset has {kg.n_entities} / {kg.n_relations}; retrain on this dataset"
            )

    def manifest(self) -> RunManifest:
        return RunManifest(
            key_command=self.command,
            key_artifact=self.layout.relative(self.artifact) if self.artifact else "",
            config=self.config.to_manifest(),
            seed=self.config.seed,
            version=VERSION,
            timings=dict(self.timings),
            artifacts=dict(self.artifacts),
            details=dict(self.details),
        )

    async def run(self, progress: bool = True) -> bool:
        """
        Execute the command.

        Args:
            progress: Show progress messages

        Returns:
            True if the command succeeded, False otherwise (see ``self.error``)
        """
        if progress:
            logger.info(f"Starting {self.name}")

        started = time.perf_counter()
        try:
            self.artifact = await asyncio.to_thread(self.execute)
            self.timings["total"] = time.perf_counter() - started
            self.store.add(self.manifest(), check_exists=False)

            if progress:
                logger.success(f"✓ {self.name}: {self.artifact} ({self.timings['total']:.1f}s)")
            return True

        except Exception as e:
            self.error = e
            logger.error(f"✗ {self.name} failed: {e}")
            return False

    def get_stats(self) -> dict:
        return {
            'command': self.command,
            'artifact': str(self.artifact) if self.artifact else None,
            'seconds': self.timings.get("total"),
            'error': str(self.error) if self.error else None,
            **self.details,
        }
