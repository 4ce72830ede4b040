"""Spectral-gap, anti-crossing and LENS analysis for small transverse-field annealing Hamiltonians."""

__version__ = "0.1.0"
