"""Distributed finite-time bearing-only target tracking via signum dynamic average consensus."""

__version__ = "0.1.0"
