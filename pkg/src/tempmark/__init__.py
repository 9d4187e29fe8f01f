"""Learning temporal relations between main and subordinate clauses from overt markers."""

__version__ = "0.1.0"
