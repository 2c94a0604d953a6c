"""Exception types shared across the package."""


class UnistratError(Exception):
    """Base class for all errors raised by this package."""


class FormulaParseError(UnistratError):
    """Raised on malformed formula text; carries the offending position."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class InputFormatError(UnistratError):
    """Raised on malformed arena/transducer/strategy/system text input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NameCollisionError(UnistratError):
    """Raised when a supposedly fresh proposition name is already in use."""


class PartialStrategyError(UnistratError):
    """Raised when a strategy is undefined at a reachable owned position."""


class CapExceeded(UnistratError):
    """Raised when a constructed state space grows past its configured cap."""

    def __init__(self, what, size, cap, iteration=None):
        detail = f"{what}: {size} exceeds cap {cap}"
        if iteration is not None:
            detail += f" (elimination round {iteration})"
        super().__init__(detail)
        self.what = what
        self.size = size
        self.cap = cap
        self.iteration = iteration


class EncodingError(UnistratError):
    """Raised when an input system violates an encoder's preconditions."""


class StrictSynthesisUnsupported(UnistratError):
    """Raised when synthesis (not checking) of strictly-uniform strategies is requested.

    Deciding existence of strictly-uniform strategies is an open problem;
    only checking a given finite-memory strategy is offered.
    """
