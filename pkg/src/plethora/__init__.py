"""Computations with algebras of power operations."""

__version__ = "0.1.0"
