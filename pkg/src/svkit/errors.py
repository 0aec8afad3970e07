"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: DataError (and its subclasses) exits
with 2, NumericalDegeneracyError with 3.
"""


class DataError(ValueError):
    """Malformed, inconsistent, or degenerate input data."""


class ParseError(DataError):
    """A text or binary payload failed to parse.

    ``line`` is the 1-based line number for text inputs, None otherwise.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicatePairError(DataError):
    """The same (enroll, test) pair occurred twice where pairs must be unique."""


class AlignmentError(DataError):
    """Score sets and trial lists do not cover identical trial pairs."""


class NumericalDegeneracyError(ArithmeticError):
    """A computation degenerated numerically: a neighbor distribution
    underflowed to all-zero, a KL divergence became infinite, or an
    optimization diverged to non-finite coordinates."""
