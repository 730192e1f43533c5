"""Spectral analysis of scaling quantum graphs."""

__version__ = "0.1.0"
