"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: DataError -> 3, NumericalError -> 4.
"""


class KstepmleError(Exception):
    """Base class for package errors."""


class DataError(KstepmleError):
    """Malformed input data, CSV, or configuration file."""


class NumericalError(KstepmleError):
    """A solver or estimator failed numerically."""


class DegenerateLikelihoodError(NumericalError):
    """The likelihood carries no information (e.g. no observed events)."""


class EvaluationError(NumericalError):
    """A profile-likelihood evaluation failed; the offending point is in the message."""


class CalibrationError(NumericalError):
    """Censoring calibration target unattainable within the search bracket."""
