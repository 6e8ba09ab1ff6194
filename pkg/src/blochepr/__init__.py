"""Bloch oscillations of path-entangled photon pairs in ramped waveguide lattices."""

__version__ = "0.1.0"
