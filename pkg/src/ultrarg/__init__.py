"""Hierarchical renormalization group for phi^4 theory over the p-adics."""

__version__ = "0.1.0"
