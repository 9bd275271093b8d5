"""Exact simulation of surface-code states on embedded graphs via Pfaffians."""

__version__ = "0.1.0"
