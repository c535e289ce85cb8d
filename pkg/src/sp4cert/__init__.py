"""Exact certification toolkit for symplectic coset moves over local fields."""

__version__ = "0.1.0"
