"""Shared exception base for domain errors raised by this package."""


class CellgridError(Exception):
    """Base class for all domain errors; the CLI maps these to exit code 1."""
