# Standard library modules.
import dataclasses

# Third party modules.

# Local modules.
from .base import StoreBase, keyfields

# Globals and constants variables.


class MemoryStore(StoreBase):

    def __init__(self):
        self.storage = {}

    def exists(self, record):
        table = self._get_table_name(record)
        key = self._create_key(record)
        return key in self.storage.get(table, {})

    def _create_key(self, record):
        keys = []
        for field in keyfields(record):
            value = getattr(record, field.name)
            if dataclasses.is_dataclass(value):
                keys.append(self._create_key(value))
            else:
                keys.append(value)
        return tuple(keys)

    def add(self, record, check_exists=True):
        if check_exists and self.exists(record):
            return False

        # Nested records first
        for field in dataclasses.fields(record):
            value = getattr(record, field.name)
            if dataclasses.is_dataclass(value):
                self.add(value, check_exists)

        table = self._get_table_name(record)
        self.storage.setdefault(table, {})[self._create_key(record)] = record
        return True

    def get_alldata(self, record_class):
        table = self._get_table_name(record_class)
        return tuple(self.storage.get(table, {}).values())

    def clear(self):
        self.storage.clear()
