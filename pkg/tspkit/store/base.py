# Standard library modules.
import abc
import dataclasses
import inspect
import re

# Third party modules.

# Local modules.

# Globals and constants variables.


def iskeyfield(field):
    return field.name.startswith('key') or field.metadata.get('key', False)


def keyfields(record):
    return tuple(field for field in dataclasses.fields(record) if iskeyfield(field))


def camelcase_to_words(text):
    return re.sub("([a-z0-9])([A-Z])", r"\1 \2", text)


def record_name(record_or_class):
    """``RunManifest`` -> ``run_manifest``."""
    if not inspect.isclass(record_or_class):
        record_or_class = type(record_or_class)
    return "_".join(camelcase_to_words(record_or_class.__name__).lower().split())


def record_key(record):
    return tuple(getattr(record, field.name) for field in keyfields(record))


class StoreBase(metaclass=abc.ABCMeta):
    """Destination for run records (dataclasses whose ``key*`` fields identify them)."""

    def _get_table_name(self, record_or_class):
        return record_name(record_or_class)

    @abc.abstractmethod
    def exists(self, record):  # pragma: no cover
        raise NotImplementedError

    @abc.abstractmethod
    def add(self, record, check_exists=True):  # pragma: no cover
        """
        Adds a record to the store.
        Returns ``True`` if the record is added, ``False`` if it already exists.
        """
        raise NotImplementedError
