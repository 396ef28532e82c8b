"""Exception types shared across the toolkit.

Plain ``ValueError`` is used for domain errors (bad arguments, dimension
mismatches); the classes here mark failures that callers may want to
distinguish, mostly around file interchange and training health.
"""


class KgsemError(Exception):
    """Base class for toolkit-specific failures."""


class ParseError(KgsemError):
    """A data file violates its line format; message carries the line number."""


class FormatError(KgsemError):
    """An interchange file (semvec / vocab / transform) violates its schema."""


class CoverageError(KgsemError):
    """A semantic-vector file fails to cover the vocabulary."""


class SamplingError(KgsemError):
    """Negative sampling could not produce an admissible corruption."""


class TrainingError(KgsemError):
    """Training diverged (non-finite loss)."""
