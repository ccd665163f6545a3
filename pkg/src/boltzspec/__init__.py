"""Fourier-Galerkin solvers for the space-homogeneous Boltzmann equation on a velocity torus."""

__version__ = "0.1.0"
