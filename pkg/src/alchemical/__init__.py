"""Alchemical compound-space optimization with a simulated variational eigensolver."""

__version__ = "0.1.0"
