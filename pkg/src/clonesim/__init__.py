"""Simulator for probabilistic cloning of qubit states with entangled photon pairs."""

__version__ = "0.1.0"
