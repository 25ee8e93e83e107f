"""Simulation toolkit for noncyclic geometric, cyclic geometric and dynamical
single-qubit gates on a trapped-ion qubit."""

__version__ = "0.1.0"
