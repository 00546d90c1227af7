"""Shared exception hierarchy."""


class PhylocspError(Exception):
    """Base class for all errors raised by this package."""
