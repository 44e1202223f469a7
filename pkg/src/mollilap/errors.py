"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ConfigError(InputError):
    """Raised when a configuration file or mapping is invalid."""


class SolverError(RuntimeError):
    """Raised when a numerical solve fails to meet its contract.

    Parameters
    ----------
    message : str
        Human-readable description.
    payload : object, optional
        Diagnostic data such as the best iterate or a selection trace.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload
