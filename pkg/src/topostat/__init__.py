"""Persistent homology of Rips filtrations and statistics on persistence landscapes."""

__version__ = "0.1.0"
