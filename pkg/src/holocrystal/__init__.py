"""Lattice time-crystal dynamics and charged AdS black-hole quasinormal modes."""

__version__ = "0.1.0"
