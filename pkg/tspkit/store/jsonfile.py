# Standard library modules.
import dataclasses
import json
import re
from pathlib import Path

# Third party modules.
from loguru import logger

# Local modules.
from .base import StoreBase, record_key

# Globals and constants variables.
_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def _default(value):
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if hasattr(value, "value"):
        return value.value
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


class JsonStore(StoreBase):
    """
    One JSON document per record under ``directory``. Records may name their file
    through a ``filename`` attribute; otherwise the record type and key are used.
    """

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, record) -> Path:
        filename = getattr(record, "filename", None)
        if not filename:
            key = "_".join(str(k) for k in record_key(record)) or "record"
            filename = f"{self._get_table_name(record)}_{_UNSAFE.sub('-', key)}.json"
        return self.directory / filename

    def exists(self, record):
        return self.path_for(record).is_file()

    def add(self, record, check_exists=True):
        if check_exists and self.exists(record):
            return False
        path = self.path_for(record)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(dataclasses.asdict(record), handle, indent=2, default=_default)
            handle.write("\n")
        logger.debug(f"Wrote {self._get_table_name(record)} to {path}")
        return True
