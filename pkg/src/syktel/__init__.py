"""Exact state-vector simulation of wormhole teleportation in a two-sided
SYK model subject to a classical gravitational-wave-like drive."""

__version__ = "0.1.0"
