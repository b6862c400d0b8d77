"""Optimal-gauge analysis of truncated multimode cavity QED models."""
__version__ = "0.1.0"
