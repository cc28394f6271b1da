"""Uniform sampling of SAT solutions and model counting with a complete solver as oracle."""
__version__ = "0.1.0"
