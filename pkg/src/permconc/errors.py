"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument is outside the documented range."""


class DomainError(InvalidParameterError):
    """A bound was evaluated outside the interval where it holds."""


class SizeLimitError(InvalidParameterError):
    """An exact enumeration was requested for an instance that is too large."""


class HypothesisViolationError(ValueError):
    """The caller did not certify a hypothesis the bound relies on."""


class InvariantError(RuntimeError):
    """An internal consistency check failed."""
