"""Batch-to-online conversion in the random-order model with adaptive approximation control."""

__version__ = "0.1.0"
