"""Explicit-state model of the TSAR DHCCP cache coherence protocol."""

__version__ = "0.1.0"
