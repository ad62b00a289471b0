"""Relaxation-fluctuation diagnostics of quantum chaos."""

__version__ = "0.1.0"
