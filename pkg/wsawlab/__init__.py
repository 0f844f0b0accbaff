"""Weakly self-avoiding walk toolkit: exact enumeration, lace expansion, Monte Carlo and scaling checks."""

__version__ = "0.1.0"
