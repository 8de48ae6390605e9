"""Shared exception types for the rotator laboratory."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to reach its tolerance.

    Carries the last residual so callers can decide whether the partial
    result is usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ProjectionError(RuntimeError):
    """Isochronal projection found no root in its search window."""


class PhaseUndefinedError(RuntimeError):
    """Order parameter too close to zero for a meaningful phase."""


class NoPeriodError(RuntimeError):
    """A rotation period was requested for a non-rotating flow."""


class StabilityError(ValueError):
    """Requested time step exceeds the solver's stability bound."""

    def __init__(self, dt, bound):
        super().__init__(
            f"dt = {dt:g} exceeds the advective stability bound {bound:g}"
        )
        self.dt = dt
        self.bound = bound


class ResolutionWarning(UserWarning):
    """Spectral tail no longer negligible; increase the mode count."""
