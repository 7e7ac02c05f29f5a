"""Separating pairs of differential forms over fractal contact sets."""

__version__ = "0.1.0"
