"""Modular completions of generating functions of CM traces: numerics and checks."""

__version__ = "0.1.0"
