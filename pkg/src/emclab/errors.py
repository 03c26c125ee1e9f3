"""Exception types shared across the package."""


class EmcLabError(Exception):
    """Base class for all errors raised by emclab."""


class PreconditionError(EmcLabError, ValueError):
    """An operation was called outside its domain."""


class ScaleLimitError(EmcLabError):
    """A search or enumeration would exceed its configured budget."""
