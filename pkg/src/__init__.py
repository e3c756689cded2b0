"""Basket option pricing under local volatility jump-diffusion models."""

__version__ = "1.0.0"
