"""Quantum-jump fractals generated by fuzzy spin-direction detectors."""

__version__ = "0.1.0"
