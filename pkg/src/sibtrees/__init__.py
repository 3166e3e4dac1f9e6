"""Finitely presented locally finite trees: self-embeddings, directions and
sibling-number certificates."""

__version__ = "0.1.0"
