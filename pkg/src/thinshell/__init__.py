"""Thin-shell limits of the ambient Bochner Laplacian on hypersurfaces."""

__version__ = "0.1.0"
