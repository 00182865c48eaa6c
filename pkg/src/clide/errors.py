"""Exception taxonomy shared by all clide modules.

Each class carries the process exit code the CLI maps it to, so library
errors translate to the documented exit-code contract without a lookup
table in the command layer.
"""


class ClideError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class IoError(ClideError):
    """Filesystem-level failure (missing file, permission, short write)."""

    exit_code = 1


class FormatError(ClideError):
    """Malformed input file: bad magic, truncation, ragged CSV, bad token."""

    exit_code = 2


class ValidationError(ClideError):
    """Well-formed input violating a contract (non-finite values, dimension
    mismatch, duplicate ids, inconsistent run metadata)."""

    exit_code = 2


class DegenerateInputError(ClideError):
    """Input too small or too flat to support the requested computation."""

    exit_code = 2


class NumericalError(ClideError):
    """Numerical routine failed to converge or produced unusable output."""

    exit_code = 3
