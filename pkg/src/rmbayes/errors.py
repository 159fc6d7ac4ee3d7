"""Exception types raised across the package."""


class RMBayesError(Exception):
    """Base class for all errors raised by rmbayes."""


class DomainError(RMBayesError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConvergenceError(RMBayesError, ArithmeticError):
    """An iterative evaluation did not reach tolerance within its budget."""


class DimensionError(RMBayesError, ValueError):
    """A data matrix has the wrong shape for the requested analysis."""


class DegenerateDataError(RMBayesError, ValueError):
    """The data admit no F statistic (zero residual sum of squares)."""


class MissingMethodError(RMBayesError, KeyError):
    """A requested Bayes factor method is absent from a result set."""
