"""Spectral computations for non-self-adjoint Dirac operators."""

__version__ = "0.1.0"
