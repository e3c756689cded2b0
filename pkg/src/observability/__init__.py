"""Observability components for logging."""
