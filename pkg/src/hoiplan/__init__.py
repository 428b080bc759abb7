"""Desk-scale planning, diffusion sampling and HOI evaluation toolkit."""

__version__ = "0.1.0"
