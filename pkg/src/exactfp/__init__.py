"""Exact vs hash-folded molecular count fingerprints for Tanimoto-kernel Gaussian processes."""

__version__ = "0.1.0"
