"""Exhaustive distribution network reconfiguration and reconfigurable-switch ranking."""

__version__ = "0.1.0"
