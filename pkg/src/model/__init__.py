"""Market model: local volatilities, assets and the basket."""
