"""Boundary terms of Kudla-Millson generating series at type II and type III cusps."""

__version__ = "0.1.0"
