"""Numerical verification of Fatou-type limit theorems for varying measures and of
average-cost optimality for Markov decision processes via vanishing discounts."""

__version__ = "0.1.0"
