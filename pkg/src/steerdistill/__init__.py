"""Simulation and analytics for distilling genuine tripartite steering."""

__version__ = "0.1.0"
