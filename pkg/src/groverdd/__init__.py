"""Noisy Grover search with dynamical-decoupling padding on a density-matrix simulator."""

__version__ = "0.1.0"
