"""Exception hierarchy shared by the simulator modules."""


class WeakTrajError(Exception):
    """Base class for all simulator errors."""


class NodeError(WeakTrajError, ValueError):
    """Density below the node threshold; phase-derivative quantities are undefined."""


class GridError(WeakTrajError, RuntimeError):
    """A tabulated density failed to normalize."""


class DegenerateError(WeakTrajError, ValueError):
    pass


class EmptyCountsError(WeakTrajError, ValueError):
    pass


class DomainError(WeakTrajError, ValueError):
    pass


class OrthogonalPostselectionError(WeakTrajError, ValueError):
    pass


class GapError(WeakTrajError, LookupError):
    """Both grid cells bracketing a query point are missing."""


class OutOfRangeError(WeakTrajError, LookupError):
    pass


class MismatchError(WeakTrajError, ValueError):
    pass


class ConfigError(WeakTrajError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnknownKeyError(ConfigError):
    pass


class ConflictError(ConfigError):
    pass


class NonFiniteError(WeakTrajError, ValueError):
    """An output cell would contain NaN or Inf."""
