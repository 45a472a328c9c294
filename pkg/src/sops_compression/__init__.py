"""Stochastic compression of self-organizing particle systems on the triangular lattice."""

__version__ = "0.1.0"
