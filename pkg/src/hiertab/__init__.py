"""Insight-driven hierarchical table transformation and visualization engine."""

__version__ = "0.1.0"
