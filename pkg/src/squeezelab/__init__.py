"""Sensitivity engine for squeezed-light interferometers."""

__version__ = "0.1.0"
