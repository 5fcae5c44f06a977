"""Exact verification and construction tools for the lonely runner
conjecture and coprime mappings between intervals."""

__version__ = "0.1.0"
