"""Certified biLipschitz approximation of planar piecewise-linear curves."""

__version__ = "0.1.0"
