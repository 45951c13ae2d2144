"""Automated energy/accuracy trade-offs for intermittently powered programs."""

__version__ = "0.1.0"
