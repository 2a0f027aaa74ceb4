"""Spectral triples, geodesics and Kusuoka geometry on the Sierpinski and harmonic gaskets."""

__version__ = "0.1.0"
