"""Collaborative Bayesian optimization with knee-point alternative sets."""

__version__ = "0.1.0"
