"""Exception hierarchy shared across the package."""


class BlochEPRError(Exception):
    """Base class for all package errors."""


class ValidationError(BlochEPRError, ValueError):
    """An input violates a documented bound or shape contract."""


class DomainError(BlochEPRError, ValueError):
    """A quantity is requested outside the domain where it exists."""


class NumericalError(BlochEPRError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConfigError(BlochEPRError):
    """A device configuration document is malformed.

    ``path`` is the dotted field path of the offending entry.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
