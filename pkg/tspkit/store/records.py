"""Run records kept by the stores."""

# Standard library modules.
from dataclasses import dataclass, field
from typing import Any, Dict

# Third party modules.

# Local modules.

# Globals and constants variables.


@dataclass
class RunManifest:
    """
    What a command produced and everything needed to reproduce it.

    Attributes:
        key_command: Command name (``datagen``, ``predict-gpht``, ...)
        key_artifact: Main artifact path, relative to the output directory
        config: Effective settings
        seed: Root seed
        version: Package version
        timings: Seconds per stage
        artifacts: Every written file by role
        details: Command-specific results (sizes, staged counts, ...)
    """
    key_command: str
    key_artifact: str
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    version: str = ""
    timings: Dict[str, float] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def filename(self) -> str:
        return f"manifest_{self.key_command}.json"


@dataclass
class EvaluationRecord:
    key_prediction: str
    key_assumption: str
    report: Dict[str, Any] = field(default_factory=dict)

    @property
    def filename(self) -> str:
        stem = self.key_prediction.rsplit("/", 1)[-1].rsplit(".", 1)[0]
        return f"evaluation_{stem}_{self.key_assumption}.json"
