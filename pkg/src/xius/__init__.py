"""Exact-arithmetic laboratory for the Banach space X_ius and its norming sets."""

__version__ = "0.1.0"
