"""Finite bi-invariant metric groups: permutations, unitaries, rank-metric matrices."""

__version__ = "0.1.0"
