"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures to distinct process statuses without a lookup table of its own.
"""

USAGE = 1
PARSE = 2
SHAPE = 3
NUMERIC = 4
IO = 5


class WaveletDPError(Exception):
    exit_code = USAGE


# ---- shape / degenerate data (exit 3) ----

class InvalidSize(WaveletDPError, ValueError):
    exit_code = SHAPE


class ShapeMismatch(WaveletDPError, ValueError):
    exit_code = SHAPE


class DegenerateRange(WaveletDPError, ValueError):
    """Raised when a min-max rescaling is asked of a constant matrix."""
    exit_code = SHAPE


class InsufficientData(WaveletDPError, ValueError):
    exit_code = SHAPE


class TooLarge(WaveletDPError, ValueError):
    exit_code = SHAPE


class MissingTrace(WaveletDPError, ValueError):
    exit_code = SHAPE


# ---- parameter errors (exit 1) ----

class InvalidParameter(WaveletDPError, ValueError):
    exit_code = USAGE


class DeltaOutOfRange(InvalidParameter):
    pass


class ZeroDelta(InvalidParameter):
    pass


class NonBinaryLabels(WaveletDPError, ValueError):
    exit_code = SHAPE


# ---- numeric failures (exit 4) ----

class OrthonormalityFailure(WaveletDPError, ArithmeticError):
    exit_code = NUMERIC


class ArgumentOutOfDomain(WaveletDPError, ArithmeticError):
    exit_code = NUMERIC


class Divergence(WaveletDPError, ArithmeticError):
    exit_code = NUMERIC


# ---- input parsing (exit 2) ----

class ParseError(WaveletDPError, ValueError):
    exit_code = PARSE

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class NonNumericCell(ParseError):
    pass


class RaggedRows(ParseError):
    pass


class UnsupportedFormat(ParseError):
    pass


# ---- I/O (exit 5) ----

class IoError(WaveletDPError, OSError):
    exit_code = IO
