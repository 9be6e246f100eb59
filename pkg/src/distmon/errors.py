"""Shared exception base so the CLI and service map failures uniformly."""


class DistmonError(Exception):
    """Base class for every error raised by this package."""
