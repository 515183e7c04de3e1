"""Predictive construction of initial fuzzing corpora."""

__version__ = "0.1.0"
