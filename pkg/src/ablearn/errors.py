"""Exception types shared across the package."""


class AblearnError(Exception):
    """Base class for all package-specific errors."""


class InputError(AblearnError, ValueError):
    """A caller-supplied value violates a precondition."""


class CapacityError(AblearnError):
    """An exact enumeration would exceed its size guard."""


class ContradictionError(AblearnError):
    """A response has zero probability under the current belief.

    Surfaced instead of silently renormalising: it means the hypothesis
    set cannot explain the observed response.
    """


class ConvergenceError(AblearnError):
    """An optimiser hit its iteration cap before meeting tolerance."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ExhaustionError(AblearnError):
    """A selection was requested but no unqueried examples remain."""


class ProtocolError(AblearnError):
    """A session message arrived out of order."""


class ParseError(AblearnError):
    """A dataset file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MaskedLabelError(AblearnError):
    """The label of a masked (never-revealed) example was read."""
