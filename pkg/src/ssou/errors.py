"""Shared exception types."""


class QuadratureError(RuntimeError):
    """Adaptive Fourier inversion failed to reach the requested tolerance."""


class InsufficientDataError(ValueError):
    """Too few observations for the requested estimator."""


class NoAscentError(RuntimeError):
    """Line search failed on the very first optimizer step (bad warm start)."""


class NotPositiveDefiniteError(ValueError):
    """A matrix required to be positive definite is not."""
