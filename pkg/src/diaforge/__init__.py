"""Synthetic technical-diagram corpus toolkit.

Generates Mermaid diagrams of eight families under difficulty profiles,
pairs them with templated descriptions, derives completion tasks, augments
rendered rasters, and scores model-generated diagram code.
"""

__version__ = "0.1.0"
