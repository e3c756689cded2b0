"""Batch harness: configs, table reproduction and reports."""
