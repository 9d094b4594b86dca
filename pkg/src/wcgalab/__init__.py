"""Weak Chebyshev greedy approximation in L^p(log L)^alpha spaces."""

__version__ = "0.1.0"
