"""Distributed compressed sensing on a line sensor network with packet erasures."""
__version__ = "0.1.0"
