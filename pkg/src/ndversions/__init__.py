"""Numerical exercises on positive definite norm-dependent functions and embedding in L0."""

__version__ = "0.1.0"
