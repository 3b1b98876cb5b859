"""Deterministic simulations of single-photon interferometry, entangled photon
pairs, detection and double-slit impacts."""

__version__ = "0.1.0"
