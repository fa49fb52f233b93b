"""Exact finite-volume tools for lattice fermions: CAR algebra, dynamics,
Lieb-Robinson style bound certification and linear response."""

__version__ = "0.1.0"
