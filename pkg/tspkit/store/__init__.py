"""
Store Package
=============

Destinations for run records.

Available stores:
- StoreBase: Abstract base class
- MemoryStore: In-memory storage
- JsonStore: One JSON document per record
- ChainStore: Chain multiple stores together
- PassThroughStore: No-op store for testing
"""

from .base import StoreBase, keyfields, record_key, record_name
from .chain import ChainStore
from .jsonfile import JsonStore
from .memory import MemoryStore
from .passthrough import PassThroughStore
from .records import EvaluationRecord, RunManifest

__all__ = [
    'StoreBase',
    'MemoryStore',
    'PassThroughStore',
    'JsonStore',
    'ChainStore',
    'RunManifest',
    'EvaluationRecord',
    'keyfields',
    'record_key',
    'record_name',
]
