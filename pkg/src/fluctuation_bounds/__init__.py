"""Simulate small open quantum systems and check fluctuation-growth bounds."""

__version__ = "0.1.0"
