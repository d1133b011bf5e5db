"""Exact constructions for measured Boolean algebras on Cantor space."""

__version__ = "0.1.0"
