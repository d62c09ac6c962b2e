"""Duplicate bug-report detection: features, boosted trees, and serving."""

__version__ = "0.1.0"
