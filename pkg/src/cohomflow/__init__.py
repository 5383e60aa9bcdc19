"""Superpotentials, first integrals and explicit solutions for cohomogeneity-one
gradient Ricci soliton Hamiltonian systems."""

__version__ = "0.1.0"
