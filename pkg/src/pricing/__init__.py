"""Pricers: expansion, LBA, closed forms, Monte Carlo and the PIDE solver."""
