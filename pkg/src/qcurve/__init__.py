"""Exact topological recursion and quantum-curve verification on genus-0 curves with involution."""

__version__ = "0.1.0"
