"""Pseudo-spectral laboratory for the Benjamin-Ono equation: solver, gauge
transformation, normal-form terms and the experiments built on them."""

__version__ = "0.1.0"
