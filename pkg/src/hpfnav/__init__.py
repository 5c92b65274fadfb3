"""Harmonic potential field planning with virtual-velocity-attractor control."""

__version__ = "0.1.0"
