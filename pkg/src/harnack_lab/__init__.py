"""Numerical verification lab for log-Harnack inequalities of diffusions and their Galerkin truncations."""

__version__ = "0.1.0"
