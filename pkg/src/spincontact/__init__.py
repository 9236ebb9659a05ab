"""Servicer-satellite spin synchronization and zero-impulse contact stack."""

__version__ = "0.1.0"
