"""Reliable broadcast under decentralized trust: k_max analysis, protocol, simulator."""

__version__ = "0.1.0"
