"""Numerical checks for pseudo-standard entanglement structures."""

__version__ = "0.1.0"
