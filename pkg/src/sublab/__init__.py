"""Numerical laboratory for sub-Riemannian Gamma-calculus on Heisenberg-type model groups."""

__version__ = "0.1.0"
