"""Exception hierarchy. Each class maps to one CLI exit code."""


class BetheError(Exception):
    exit_code = 4


class ModelError(BetheError, ValueError):
    """The model is malformed or violates a structural requirement."""

    exit_code = 2


class ParseError(ModelError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedModelError(ModelError):
    """Raised when an operation needs an associative model and gets a repulsive edge."""


class DomainError(BetheError, ValueError):
    """Pseudo-marginals outside the interior region a derivative needs."""

    exit_code = 2


class ResourceError(BetheError):
    """A size guard tripped (oracle enumeration, mesh tables)."""

    exit_code = 3


class ConsistencyError(BetheError):
    """An internal cross-check failed. Indicates a bug, not bad input."""

    exit_code = 4
