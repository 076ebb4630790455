"""Exception types shared across the package."""


class BandshapeError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BandshapeError, ValueError):
    """Invalid construction or operating parameters."""


class EmptyCodebookError(BandshapeError):
    """A band restriction left no path from the origin to the final column."""


class InfeasibleRateError(BandshapeError):
    """The requested bit count cannot be reached for any energy limit."""


class IndexRangeError(BandshapeError, IndexError):
    """Sequence index outside [0, num_sequences)."""


class InvalidSequenceError(BandshapeError, ValueError):
    """A sequence leaves the trellis (some prefix lands on an inactive node)."""


class OutOfCodebookError(InvalidSequenceError):
    """Sequence is in the trellis but its index is >= 2**k (unused by shaping)."""


class FramingError(BandshapeError):
    """Bit stream length is not a whole number of shaping blocks."""


class TrellisFormatError(BandshapeError):
    """Malformed, truncated, or inconsistent trellis file."""


class NumericalError(BandshapeError):
    """Non-finite samples detected during propagation."""
