"""Competitive co-evolution lab: Generalist algorithm and controls, predator-prey arena, progress measures."""

__version__ = "0.1.0"
