"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`ParameterError` (and subclasses) to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class LMGError(Exception):
    """Base class for all package errors."""


class ParameterError(LMGError, ValueError):
    """Invalid model or run parameter."""


class DomainError(ParameterError):
    """Phase-space point outside the disk p**2 + q**2 <= 4."""


class SingularParameterError(ParameterError):
    """A closed-form expression has a vanishing denominator."""


class ValidityError(ParameterError):
    """Parameters outside the range where a closed form applies."""


class NumericalError(LMGError, ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index
