"""
Errors
======

Exception hierarchy shared by every tspkit module.

Usage:
    from tspkit.errors import TripleParseError, ConfigError

    try:
        split = load_kg(train, valid, test)
    except TripleParseError as e:
        logger.error(f"✗ {e}")
"""

from typing import Optional


class TspkitError(Exception):
    """Base class for all tspkit errors."""


class TripleParseError(TspkitError):
    """A triple file line does not have exactly three tab-separated fields."""

    def __init__(self, path, line_number: int, line: str):
        self.path = path
        self.line_number = line_number
        self.line = line
        super().__init__(
            f"{path}:{line_number}: expected head<TAB>relation<TAB>tail, got {line!r}"
        )


class ConfigError(TspkitError, ValueError):
    """Invalid configuration value (raised before any work starts)."""


class MetricError(TspkitError, ValueError):
    """A metric was requested on inputs for which it is undefined."""


class UnknownIdentifierError(TspkitError, KeyError):
    """An entity or relation identifier is not part of the vocabulary."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown identifier"


class AlreadyAugmentedError(TspkitError):
    """Inverse and self-loop relations were already added to this graph."""


class DivergenceError(TspkitError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, loss: float, detail: Optional[str] = None):
        self.step = step
        self.loss = loss
        message = f"training diverged at step {step} (loss={loss})"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class MissingArtifactError(TspkitError):
    """A prerequisite artifact of a subcommand does not exist."""

    def __init__(self, path, hint: str):
        self.path = path
        self.hint = hint
        super().__init__(f"missing {path}; {hint}")
