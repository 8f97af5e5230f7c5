"""Exception hierarchy shared by the library and the command-line front end."""


class StmixError(Exception):
    """Base class for all errors raised by stmix."""


class DomainError(StmixError, ValueError):
    """An argument lies outside the domain of a special function."""


class InvalidParameterError(StmixError, ValueError):
    """A parameter record violates one of its invariants."""


class InputError(StmixError, ValueError):
    """Ill-formed data or configuration."""


class ConditioningError(StmixError, ArithmeticError):
    """A covariance matrix could not be factorized, even after jitter."""


class QuadratureError(StmixError, RuntimeError):
    """An adaptive quadrature failed to converge within its budget."""


class InitializationError(StmixError, RuntimeError):
    """The optimizer objective is not finite at the initial point."""


class ComparisonError(StmixError, ValueError):
    """Fit results are not comparable (different data or likelihood plan)."""


class InsufficientDataError(StmixError, ValueError):
    """A statistic has no jointly observed pairs to average over."""
