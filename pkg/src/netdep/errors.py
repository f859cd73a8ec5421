"""Exception hierarchy shared across the package."""


class NetdepError(Exception):
    """Base class for all errors raised by netdep."""


class ParameterError(NetdepError, ValueError):
    """An argument lies outside its documented domain."""


class ContractViolation(NetdepError, ValueError):
    """An input breaks a structural precondition (e.g. symmetry)."""


class DefinitenessError(NetdepError, ValueError):
    """A covariance matrix (or its spectral form) is not positive definite."""


class SingularityError(NetdepError, ValueError):
    """``I - rho W`` is singular or ``rho`` leaves the feasible range."""


class DegenerateNetworkError(NetdepError, ValueError):
    """The network carries no spectral information (all-zero weights)."""


class DegenerateRegressorError(NetdepError, ValueError):
    """A regressor is constant, so its slope is not identified."""


class FormatError(NetdepError, ValueError):
    """A file does not match its declared format.

    The message always names the file and, where meaningful, the line.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
