"""Shared exception types."""


class NumericalFailure(RuntimeError):
    """An iterative numerical routine failed to reach its tolerance."""


class NoCrossingError(RuntimeError):
    """A threshold search found no crossing inside the evolution window."""
