"""Symbolic exterior calculus on partial jet bundles for balance systems."""

__version__ = "0.1.0"
