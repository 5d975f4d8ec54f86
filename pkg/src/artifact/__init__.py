"""Bounded-degree property testing toolkit."""

from .structures import BOTTOM, DomainError, Graph, Signature, Structure

__version__ = "0.1.0"

__all__ = ["BOTTOM", "DomainError", "Graph", "Signature", "Structure", "__version__"]
