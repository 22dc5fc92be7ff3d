class CovConvError(Exception):
    """Base class for every error raised by covconv."""


class DomainError(CovConvError):
    """A point lies outside a chart domain, a chart overlap or a field region."""


class DomainExitError(DomainError):
    """An integrated curve left the chart domain.

    `last_valid` holds the coordinates of the last sample that was still valid
    and `t` its curve parameter.
    """

    def __init__(self, message, last_valid=None, t=None):
        super().__init__(message)
        self.last_valid = last_valid
        self.t = t


class NumericalError(CovConvError):
    """Singular or indefinite metric, singular Jacobian, non-finite values."""


class RankMismatchError(CovConvError):
    """Tensor, kernel and field ranks do not line up."""


class ConfigError(CovConvError):
    """Invalid experiment configuration or unknown preset/family/check."""
