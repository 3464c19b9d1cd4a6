"""Fault injection, differential oracles, and repair scoring for block projects."""

__version__ = "0.1.0"
