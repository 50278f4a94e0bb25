"""Pseudo-spectral laboratory for the half-wave map equation into the sphere."""

__version__ = "0.1.0"
