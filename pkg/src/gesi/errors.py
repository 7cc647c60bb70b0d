"""Exception hierarchy shared by the library and the CLI exit codes."""


class GesiError(Exception):
    """Base class for package errors."""


class DataError(GesiError, ValueError):
    """Bad input data: malformed files, invalid profiles, shape mismatches."""


class NumericError(GesiError, ArithmeticError):
    """A numerical procedure failed or was given a degenerate problem."""
