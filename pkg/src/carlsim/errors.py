"""Exception types raised by carlsim."""


class CarlError(Exception):
    """Base class for all carlsim errors."""


class InvalidParameter(CarlError, ValueError):
    """A physical or dimensionless parameter violates its constraints."""


class RegimeError(CarlError):
    """An operation is not defined in the current gain regime."""


class DegenerateSpectrumError(RegimeError):
    """The coupling matrix is (numerically) defective.

    Use :func:`carlsim.propagator.propagate_series` instead of the
    eigendecomposition path.
    """


class ResourceError(CarlError):
    """The requested Fock space exceeds the memory budget."""


class CutoffError(CarlError):
    """Fock-space truncation is insufficient for the requested evolution."""

    def __init__(self, message, mode=None, leakage=None):
        super().__init__(message)
        self.mode = mode
        self.leakage = leakage


class ConvergenceError(CarlError):
    """The oracle cutoff ladder failed to converge."""
