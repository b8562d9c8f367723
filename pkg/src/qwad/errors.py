"""Exception hierarchy shared by all qwad modules."""


class QwadError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(QwadError):
    """Source text could not be parsed. Carries 1-based line/column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class ValidationError(QwadError):
    """Structurally well-formed input violates a semantic requirement
    (undeclared variable, dimension mismatch, parameter index out of
    range, malformed measurement, additive program where a plain one
    is required, ...)."""


class NumericError(QwadError):
    """A numerical invariant failed beyond tolerance (non-Hermitian
    observable, trace blow-up, NaN during training, ...)."""
