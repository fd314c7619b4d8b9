"""Exception hierarchy shared by all modules."""


class IonSqueezeError(Exception):
    """Base class for all package errors."""


class DomainError(IonSqueezeError, ValueError):
    """A physical quantity is outside the domain where the model is defined."""


class IntegrationError(IonSqueezeError, RuntimeError):
    """An ODE integration failed.

    Parameters
    ----------
    message : str
        Human readable description.
    time : float, optional
        Time (in the caller's units) at which the failure occurred.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SingularityError(IntegrationError):
    """Two ions crossed or approached closer than the separation floor."""


class SearchError(IonSqueezeError, RuntimeError):
    """A root search could not bracket or converge on its target."""


class UnderTruncationError(IonSqueezeError, RuntimeError):
    """The Fock-space truncation is too small for the evolved state."""

    def __init__(self, message, time=None, tail_mass=None):
        super().__init__(message)
        self.time = time
        self.tail_mass = tail_mass


class ConfigError(IonSqueezeError, ValueError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
