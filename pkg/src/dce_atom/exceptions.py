"""Exception hierarchy shared by every module of the package."""


class DCEError(Exception):
    """Base class for all errors raised by dce_atom."""


class ConfigError(DCEError, ValueError):
    """Invalid parameters or run configuration.

    ``key`` names the offending configuration entry when one is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UsageError(DCEError, ValueError):
    """Operands of incompatible shape or space were combined."""


class NumericalError(DCEError, ArithmeticError):
    """A numerical routine produced a non-finite or failed result."""


class IntegrationError(NumericalError):
    """The adaptive integrator could not meet its tolerance within budget."""


class ConsistencyError(NumericalError):
    """Two routes to the same quantity disagree beyond tolerance."""
