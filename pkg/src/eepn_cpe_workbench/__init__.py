"""Carrier phase estimation under equalization-enhanced phase noise."""
__version__ = "0.1.0"
