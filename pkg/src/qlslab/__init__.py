"""Numerical verification lab for large sieve inequalities over quadratic characters."""

__version__ = "0.1.0"
