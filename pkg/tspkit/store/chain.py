# Standard library modules.

# Third party modules.

# Local modules.
from .base import StoreBase

# Globals and constants variables.


class ChainStore(StoreBase):

    def __init__(self, *stores):
        if len(stores) <= 1:
            raise ValueError('Specify at least 2 stores')
        self.stores = stores

    def exists(self, record):
        """
        Only check if the record exists in the first store.
        """
        return self.stores[0].exists(record)

    def add(self, record, check_exists=True):
        """
        Adds the record to all stores. Stops as soon as one store returns ``False``.
        """
        for store in self.stores:
            if not store.add(record, check_exists):
                return False
        return True
