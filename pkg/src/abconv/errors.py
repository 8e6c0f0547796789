"""Exception types shared across the package."""

from __future__ import annotations


class InvariantViolation(ValueError):
    """A structural invariant of the data failed (CLI exit code 3)."""


class InstanceParseError(ValueError):
    """An instance or certificate file could not be parsed (CLI exit code 2)."""


class UnknownCatalogName(KeyError):
    """Requested catalog entry does not exist (CLI exit code 4)."""
