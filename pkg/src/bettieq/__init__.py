"""Empirical and numerical verification of Betti-number equivalence for
parametric families of distributions: persistent homology on random Cech and
Rips complexes, exact family samplers, excess-mass statistics, and quadrature
verifiers for group-invariance, modular-character, and score-orthogonality
conditions."""

__version__ = "0.1.0"
