"""Lattice Loc - exact localisation of lattice field functionals"""

__version__ = "1.0.0"
