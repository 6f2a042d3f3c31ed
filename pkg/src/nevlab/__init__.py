"""Numerical laboratory for value distribution of holomorphic curves on the
complex plane and the Poincare disc."""

__version__ = "0.1.0"
