"""Dynamical Lie algebras of XY-mixer circuits and warm-started QAOA."""
__version__ = "0.1.0"
