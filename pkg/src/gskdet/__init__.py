"""Numerics for the time-dependent generalised sine kernel determinant."""

__version__ = "0.1.0"
