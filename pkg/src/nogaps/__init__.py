"""Eigenvector delocalization for non-Hermitian random matrices, at desk scale."""

__version__ = "0.1.0"
