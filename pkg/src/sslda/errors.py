"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Malformed, inconsistent or non-finite input."""


class SingularCovariance(ArithmeticError):
    """Covariance not positive definite even after eigenvalue flooring."""


class EmptyClass(ValueError):
    """A class received zero total weight."""


class ParseError(ValueError):
    """A delimited file could not be parsed.

    ``row`` and ``column`` are 1-based locations when known.
    """

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.column = column


class MoreThanTwoClasses(ParseError):
    """The label column holds more than two distinct values."""


class NonFiniteValue(ParseError):
    """A feature value parsed to NaN or infinity."""


class CannotStratify(ValueError):
    """No labeled subset containing both classes was found within the attempt budget."""
