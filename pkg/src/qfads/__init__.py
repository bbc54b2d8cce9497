"""Spectral and dynamical numerics on quasi-Fuchsian AdS3 quotients."""

__version__ = "0.1.0"
