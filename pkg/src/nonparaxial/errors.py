"""Exception hierarchy shared by every module."""


class NonParaxialError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(NonParaxialError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BandLimitError(DomainError):
    """Spectral content at or beyond the admissible band edge."""


class ConfigurationError(NonParaxialError, ValueError):
    """Numerical set-up (grid, steps, windows) cannot support the request."""


class AdmissibilityError(NonParaxialError, ValueError):
    """A mode does not satisfy the hypotheses of a loop integral."""


class NonConvergenceError(NonParaxialError, RuntimeError):
    """A quadrature refinement changed the result by more than the tolerance."""
