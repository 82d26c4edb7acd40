"""Adaptive social-comparison platform for daily step activity."""

__version__ = "0.1.0"
