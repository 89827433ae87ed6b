"""Singular-value calculus for semifinite factors: decreasing-function
algebra, spectral profiles, submodule descriptors, commutator-space
membership decisions, Brown-measure criteria, and a dense-matrix oracle."""

__version__ = "0.1.0"
