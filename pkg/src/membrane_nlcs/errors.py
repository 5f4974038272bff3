"""Exception hierarchy.

Every exception carries the process exit code the command line uses for it.
"""


class NlcsError(Exception):
    exit_code = 1


class UsageError(NlcsError, ValueError):
    """Bad arguments, mismatched bases or an invalid configuration."""

    exit_code = 2


class ParameterDomainError(UsageError):
    """A physical or dimensionless parameter is outside its allowed range."""


class NumericError(NlcsError, ArithmeticError):
    exit_code = 3


class SeriesDivergenceError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


class SingularityError(NumericError):
    """A deformed operator needs 1/f(n) at a level where f(n) vanishes."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class ApproximationBreakdownError(NumericError):
    pass


class TruncationLeakError(NlcsError):
    """Population reached the top of a truncated Fock basis."""

    exit_code = 4

    def __init__(self, message, dim=None, leaked=None):
        super().__init__(message)
        self.dim = dim
        self.leaked = leaked
