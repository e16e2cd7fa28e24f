"""Exact toolkit for gapped cyclic filtered A-infinity structures."""

__version__ = "0.1.0"
