"""Numerical laboratory for random regular graphs, their Green's functions and spectra."""

__version__ = "0.1.0"
