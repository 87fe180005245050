"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: input and domain errors exit with 2,
numerical and model failures with 3, network failures with 4.
"""


class GdpcastError(Exception):
    """Base class for all package errors."""


class InputError(GdpcastError, ValueError):
    """Malformed or insufficient input (too short, missing field, bad shape)."""


class DomainError(InputError):
    """A value lies outside the mathematical domain of an operation."""


class NumericalError(GdpcastError, ArithmeticError):
    """A computation produced a non-finite or degenerate quantity."""


class ModelError(GdpcastError, RuntimeError):
    """A model could not be constructed or estimated."""


class NetworkError(GdpcastError, OSError):
    """Remote data could not be retrieved or failed validation."""
