"""Exception types shared across the package.

The CLI maps InputError to exit code 1 and NumericalError to exit code 2;
library users can catch either family directly.
"""


class InputError(ValueError):
    """Malformed user input: bad shapes, counts, config keys, file formats."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy or validity contract."""


class NotPSDError(NumericalError):
    """A matrix required to be positive semi-definite is not (beyond tolerance)."""


class SingularMatrixError(NumericalError):
    """A linear solve hit an (numerically) singular matrix."""
