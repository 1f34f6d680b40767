"""Hybrid Monte-Carlo / semi-Lagrangian solvers for parabolic PDEs."""

__version__ = "0.1.0"
