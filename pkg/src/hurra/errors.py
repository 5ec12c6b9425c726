"""Exception types shared across the package.

The CLI maps each of these onto a distinct exit code.
"""


class HurraError(Exception):
    """Base class for all package errors."""


class InputFormatError(HurraError, ValueError):
    """A file could not be parsed (bad header, non-numeric cell, ...)."""


class EmptyDataError(HurraError, ValueError):
    """Nothing left to work with, e.g. every feature was dropped."""


class DegenerateConfigError(HurraError, ValueError):
    """A configuration yields an undefined quantity.

    Typical case: a binarization that marks every timeslot (or none) as
    anomalous, which leaves the feature scores without a denominator.
    """


class UndefinedMetricError(HurraError, ValueError):
    """A metric's denominator is zero (e.g. precision with no alarms)."""
